#pragma once

#include "romes/closure.hpp"
#include "romes/metrics.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace romes {

inline constexpr int kConfigSchemaVersion = 1;
inline constexpr const char* kVersionString = "0.1.0";

/// Parsed experiment description (one JSON file drives both the single-run
/// and the Pareto-study commands).
struct ExperimentConfig {
  std::string benchmark;  ///< linear_diffusion | nonlinear_reaction
  Index grid_m = 16;
  TrainingConfig training;
  std::optional<ParetoGrid> pareto;  ///< required by the pareto command only
  std::string output_dir;
};

/// Loads and validates a config file.  Throws ConfigError naming the missing
/// or malformed field.
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Parses the same schema from an in-memory JSON string (used by tests).
ExperimentConfig parse_experiment_config(const std::string& text);

}  // namespace romes
