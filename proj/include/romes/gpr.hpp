#pragma once

#include "romes/stats.hpp"
#include "romes/types.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace romes {

/// Hyperparameters of the squared-exponential kernel with additive
/// observation noise: k(a, b) = signal_variance * exp(-(a-b)^2 / (2 * length_scale)),
/// observation covariance W = K + noise_variance * I.  The length scale
/// divides the squared distance directly (no squared length scale).
struct GpHyperparameters {
  double noise_variance = 0.0;
  double signal_variance = 0.0;
  double length_scale = 0.0;

  void validate() const;
};

/// Kernel Gram block between feature vectors a and b (entry i,j pairs a_i, b_j).
Matrix kernel_matrix(const Vector& a, const Vector& b, const GpHyperparameters& hyper);

/// Generalized-least-squares estimate of the linear prior-mean coefficients
/// for the basis h(rho) = [1, rho]:
///   beta = (H' W^{-1} H)^{-1} H' W^{-1} y,   W = K + noise_variance I.
/// Throws ContractViolation for fewer than 3 points or a degenerate design
/// (all features equal).
Eigen::Vector2d fit_beta_mle(const Vector& features, const Vector& responses,
                             const GpHyperparameters& hyper);

struct GpPrediction {
  double mean = 0.0;
  double variance = 0.0;
};

/// Univariate Gaussian-process regression model with explicit linear prior
/// mean.  The posterior at a query rho is
///   mean     = h(rho) beta + k(rho, X) W^{-1} (y - H beta)
///   variance = k(rho, rho) - k(rho, X) W^{-1} k(X, rho) + noise_variance,
/// i.e. the smoother acts on the prior-mean residuals, which reproduces exact
/// block-Gaussian conditioning of the joint prior.
class GpErrorModel {
public:
  /// Fits beta by MLE and caches the factorization of W.
  static GpErrorModel fit(Vector features, Vector responses, const GpHyperparameters& hyper);

  /// Rebuilds a model from serialized parts (recomputes the cache; beta is
  /// trusted as stored).
  static GpErrorModel from_parts(const GpHyperparameters& hyper, const Eigen::Vector2d& beta,
                                 Vector features, Vector responses);

  [[nodiscard]] GpPrediction posterior(double rho) const;
  [[nodiscard]] std::vector<GpPrediction> posterior(const Vector& rho) const;

  /// Central probability-omega interval: mean -+ sqrt(2) * std * erf_inv(omega).
  [[nodiscard]] std::pair<double, double> prediction_interval(double rho, double omega) const;

  [[nodiscard]] const GpHyperparameters& hyper() const { return hyper_; }
  [[nodiscard]] const Eigen::Vector2d& beta() const { return beta_; }
  [[nodiscard]] const Vector& features() const { return features_; }
  [[nodiscard]] const Vector& responses() const { return responses_; }
  [[nodiscard]] Index training_size() const { return features_.size(); }

private:
  GpErrorModel() = default;
  void rebuild_cache();

  GpHyperparameters hyper_;
  Eigen::Vector2d beta_ = Eigen::Vector2d::Zero();
  Vector features_;
  Vector responses_;
  Eigen::LLT<Matrix> llt_;  ///< Cholesky of W = K + noise_variance I (jittered at most once)
  Vector alpha_;            ///< W^{-1} (y - H beta)
};

/// Cholesky of an (expected) SPD matrix with the one-shot jitter policy: on
/// failure, add 1e-10 * trace / n to the diagonal and retry once; a second
/// failure throws SolverError.
Eigen::LLT<Matrix> robust_llt(const Matrix& w, const std::string& context);

enum class LossKind { log_likelihood, interval, combined, ks };

LossKind loss_kind_from_string(const std::string& name);
[[nodiscard]] const char* to_string(LossKind kind);

/// Loss selector; `omega` is only read by the interval loss. The combined
/// loss always sums the interval losses at omega in {0.80, 0.90, 0.95, 0.99}.
struct LossSpec {
  LossKind kind = LossKind::log_likelihood;
  double omega = 0.9;
};

inline constexpr double kCombinedLossOmegas[] = {0.80, 0.90, 0.95, 0.99};

/// Scores held-out predictions against their true responses:
///  - log_likelihood: negative log-likelihood of the truths under the
///    predictive Gaussians;
///  - interval: (omega - observed coverage frequency)^2;
///  - combined: sum of the interval losses over {0.80, 0.90, 0.95, 0.99};
///  - ks: Kolmogorov-Smirnov statistic of standardized residuals vs N(0,1).
/// Throws SolverError when a predicted variance is not strictly positive.
double evaluate_loss(const LossSpec& loss, std::span<const GpPrediction> predictions,
                     std::span<const double> truths);

/// Equispaced hyperparameter grid scaled by the sample standard deviation
/// sigma_t of the responses: noise in [0.01, 0.25] sigma_t, signal in
/// [0.1, 1] sigma_t, length scale in [0.001, 0.1] sigma_t, `points_per_dim`
/// values per dimension.  Ordering: length scale outermost, then signal, then
/// noise (ties in cross-validation resolve to the first minimum in this
/// order).
std::vector<GpHyperparameters> default_hyper_grid(const Vector& responses,
                                                  int points_per_dim = 12);

struct CrossValidationReport {
  std::vector<double> losses;     ///< mean fold loss per grid point (+inf if infeasible)
  std::size_t selected = 0;       ///< index of the winning grid point
  std::vector<std::vector<Index>> folds;  ///< validation indices per fold
};

/// K-fold cross-validation over a hyperparameter grid: a seeded shuffle deals
/// indices round-robin into K folds; each grid point is scored by the mean
/// held-out loss over folds (prior-mean coefficients refit per fold); the
/// argmin wins with first-minimum tie-breaking; the returned model is refit
/// on all data at the winning hyperparameters.  Grid points whose Cholesky
/// fails even after the jitter retry score +inf; if every point is infeasible
/// a SolverError propagates.
GpErrorModel cross_validate(const Vector& features, const Vector& responses,
                            const std::vector<GpHyperparameters>& grid, int k_folds,
                            const LossSpec& loss, std::uint64_t seed,
                            CrossValidationReport* report = nullptr);

}  // namespace romes
