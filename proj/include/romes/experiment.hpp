#pragma once

#include "romes/config.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace romes {

/// Command-line adjustments applied on top of a config file.
struct RunOverrides {
  std::optional<std::uint64_t> seed_override;  ///< replaces the five seeds with S..S+4
  std::optional<std::string> output_dir;
  bool quiet = false;
};

/// Trains a package, evaluates it on the held-out online set, and writes the
/// package checkpoint, per-coordinate GP scatter/curve CSVs, the metric
/// table, and a summary JSON into the output directory.
void run_experiment(const ExperimentConfig& config, const RunOverrides& overrides);

/// Runs the accuracy-versus-cost study and writes the point and front CSV
/// tables plus a summary JSON.
void run_pareto(const ExperimentConfig& config, const RunOverrides& overrides);

inline constexpr int kExitSuccess = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitNumericalError = 3;

/// Full command-line entry point (subcommands `run <config>` and
/// `pareto <config>`, flags --seed-override, --out, --quiet).  Returns the
/// process exit code: 0 success, 2 configuration error, 3 numerical failure.
int cli_main(int argc, const char* const* argv);

}  // namespace romes
