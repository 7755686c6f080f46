#pragma once

#include "romes/duals.hpp"
#include "romes/gpr.hpp"
#include "romes/problems.hpp"
#include "romes/rom.hpp"
#include "romes/subspaces.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace romes {

struct SetSizes {
  Index pod = 0;     ///< snapshot parameters for the state bases
  Index dual = 0;    ///< parameters for dual snapshot harvesting
  Index romes = 0;   ///< parameters for the indicator/error training pairs
  Index online = 0;  ///< held-out evaluation parameters
};

struct Seeds {
  std::uint64_t pod = 0;
  std::uint64_t dual = 0;
  std::uint64_t romes = 0;
  std::uint64_t online = 0;
  std::uint64_t cv = 0;
};

enum class VarianceWeighting { as_written, squared };

VarianceWeighting variance_weighting_from_string(const std::string& name);
[[nodiscard]] constexpr const char* to_string(VarianceWeighting w) {
  return w == VarianceWeighting::as_written ? "as_written" : "squared";
}

struct TrainingConfig {
  Index n = 2;
  Index n_perp = 0;
  Index n_p = 4;
  DualMode dual_mode = DualMode::shared;
  Projection projection = Projection::galerkin;
  MetricKind metric = MetricKind::identity;
  LossSpec loss;
  int cv_folds = 10;
  int grid_points_per_dim = 12;
  SetSizes sizes;
  Seeds seeds;
  double fom_tolerance = 1e-10;
  double rom_tolerance = 1e-10;
  int max_iterations = 50;
  VarianceWeighting variance_weighting = VarianceWeighting::squared;
  Index qoi_samples = 100;

  [[nodiscard]] RomOptions rom_options() const {
    return RomOptions{projection, rom_tolerance, max_iterations};
  }
  [[nodiscard]] NewtonOptions fom_options() const {
    NewtonOptions o;
    o.tolerance = fom_tolerance;
    o.max_iterations = max_iterations;
    return o;
  }
};

/// Sampled parameter sets behind a trained package; kept so that held-out
/// evaluations can assert disjointness from every training set.
struct Provenance {
  Matrix pod_params;
  Matrix dual_params;
  Matrix romes_params;
  Seeds seeds;
};

/// Everything the online stage needs: state bases, dual bases, one GP model
/// per generalized error coordinate, and the training provenance.
struct OfflinePackage {
  SubspaceSet subspaces;
  DualBasis dual_basis;
  std::vector<GpErrorModel> gp_models;  ///< n_bar entries, in-plane first
  TrainingConfig config;
  Provenance provenance;

  [[nodiscard]] Index n_bar() const { return subspaces.n_bar(); }
};

/// Offline pipeline: (1) sample POD parameters, solve the FOM, build the
/// in-plane/out-of-plane bases from mean-centered snapshots; (2) sample dual
/// parameters and compress full-order dual snapshots into the reduced dual
/// basis (the identity basis when n_p >= N); (3) sample training parameters
/// and collect (indicator, exact-coordinate) pairs; (4) cross-validate one GP
/// per coordinate.  Solver and rank failures propagate annotated with the
/// offending step.
OfflinePackage offline_train(const FomProblem& problem, const TrainingConfig& config);

/// Gaussian model of the post-correction state: the ROM state plus the
/// basis-expanded GP posterior over the error coordinates.
struct StatisticalStateModel {
  Vector rom_state;
  Vector coordinate_means;      ///< n_bar GP posterior means
  Vector coordinate_variances;  ///< n_bar GP posterior variances
  Vector correction_mean;       ///< Phi_bar * coordinate_means
  Vector mean_state;            ///< rom_state + correction_mean
  Vector entry_variance;        ///< per-entry variance per the configured weighting
};

/// Builds the state model from coordinate means/variances.  Entry variances
/// combine coordinate variances through Phi_bar entries (`squared`) or the
/// raw entries (`as_written`).
StatisticalStateModel assemble_state_model(const Vector& rom_state, const SubspaceSet& subspaces,
                                           const Vector& coordinate_means,
                                           const Vector& coordinate_variances,
                                           VarianceWeighting weighting);

/// Monte-Carlo (and, for linear functionals, closed-form) pushforward of the
/// statistical state model through the problem's output functionals.
struct QoiModelSample {
  std::vector<std::string> labels;
  Vector rom_values;    ///< functional at the uncorrected ROM state
  Matrix samples;       ///< n_samples x #functionals
  Vector sample_means;
  Vector sample_variances;  ///< unbiased (n-1) sample variances
  std::vector<std::optional<GpPrediction>> closed_form;  ///< linear functionals only
};

struct OnlinePrediction {
  RomSolution rom;
  Vector indicators;  ///< n_bar dual-weighted residual indicators
  StatisticalStateModel state_model;
  QoiModelSample qoi;
};

/// Online stage at one parameter: reduced solve, reduced dual solves,
/// indicators, per-coordinate GP posteriors, state model, and the sampled
/// QoI pushforward (`n_samples` draws, seeded).
OnlinePrediction online_predict(const FomProblem& problem, const OfflinePackage& package,
                                const Vector& mu, Index n_samples, std::uint64_t seed);

}  // namespace romes
