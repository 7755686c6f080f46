#include "romes/gpr.hpp"

#include "romes/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <utility>

namespace romes {

void GpHyperparameters::validate() const {
  const auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!positive(noise_variance) || !positive(signal_variance) || !positive(length_scale)) {
    throw ContractViolation("GpHyperparameters: all entries must be finite and positive");
  }
}

Matrix kernel_matrix(const Vector& a, const Vector& b, const GpHyperparameters& hyper) {
  hyper.validate();
  Matrix k(a.size(), b.size());
  for (Index j = 0; j < b.size(); ++j) {
    for (Index i = 0; i < a.size(); ++i) {
      const double d = a(i) - b(j);
      k(i, j) = hyper.signal_variance * std::exp(-d * d / (2.0 * hyper.length_scale));
    }
  }
  return k;
}

Eigen::LLT<Matrix> robust_llt(const Matrix& w, const std::string& context) {
  Eigen::LLT<Matrix> llt(w);
  if (llt.info() == Eigen::Success) return llt;
  const double jitter = 1e-10 * w.trace() / static_cast<double>(w.rows());
  Matrix repaired = w;
  repaired.diagonal().array() += jitter;
  llt.compute(repaired);
  if (llt.info() != Eigen::Success) {
    throw SolverError(context + ": covariance is not positive definite even after jitter");
  }
  return llt;
}

namespace {

Matrix prior_basis(const Vector& features) {
  Matrix h(features.size(), 2);
  h.col(0).setOnes();
  h.col(1) = features;
  return h;
}

void check_design(const Vector& features, const Vector& responses) {
  if (features.size() != responses.size()) {
    throw ContractViolation("gpr: features and responses disagree in length");
  }
  if (features.size() < 3) {
    throw ContractViolation("gpr: need at least 3 training points");
  }
  const double lo = features.minCoeff();
  const double hi = features.maxCoeff();
  if (hi - lo <= 1e-13 * std::max(1.0, std::max(std::abs(lo), std::abs(hi)))) {
    throw ContractViolation("gpr: degenerate design (all features equal)");
  }
}

Eigen::Vector2d beta_from_llt(const Matrix& h, const Vector& responses,
                              const Eigen::LLT<Matrix>& llt) {
  const Matrix winv_h = llt.solve(h);
  const Vector winv_y = llt.solve(responses);
  const Eigen::Matrix2d normal = h.transpose() * winv_h;
  const Eigen::Vector2d rhs = h.transpose() * winv_y;
  Eigen::FullPivLU<Eigen::Matrix2d> lu(normal);
  if (!lu.isInvertible()) {
    throw ContractViolation("fit_beta_mle: normal equations are singular (degenerate design)");
  }
  return lu.solve(rhs);
}

}  // namespace

Eigen::Vector2d fit_beta_mle(const Vector& features, const Vector& responses,
                             const GpHyperparameters& hyper) {
  check_design(features, responses);
  Matrix w = kernel_matrix(features, features, hyper);
  w.diagonal().array() += hyper.noise_variance;
  const Eigen::LLT<Matrix> llt = robust_llt(w, "fit_beta_mle");
  return beta_from_llt(prior_basis(features), responses, llt);
}

GpErrorModel GpErrorModel::fit(Vector features, Vector responses,
                               const GpHyperparameters& hyper) {
  check_design(features, responses);
  hyper.validate();
  GpErrorModel model;
  model.hyper_ = hyper;
  model.features_ = std::move(features);
  model.responses_ = std::move(responses);
  Matrix w = kernel_matrix(model.features_, model.features_, hyper);
  w.diagonal().array() += hyper.noise_variance;
  model.llt_ = robust_llt(w, "GpErrorModel::fit");
  model.beta_ = beta_from_llt(prior_basis(model.features_), model.responses_, model.llt_);
  model.alpha_ = model.llt_.solve(model.responses_ - prior_basis(model.features_) * model.beta_);
  return model;
}

GpErrorModel GpErrorModel::from_parts(const GpHyperparameters& hyper, const Eigen::Vector2d& beta,
                                      Vector features, Vector responses) {
  check_design(features, responses);
  hyper.validate();
  GpErrorModel model;
  model.hyper_ = hyper;
  model.beta_ = beta;
  model.features_ = std::move(features);
  model.responses_ = std::move(responses);
  model.rebuild_cache();
  return model;
}

void GpErrorModel::rebuild_cache() {
  Matrix w = kernel_matrix(features_, features_, hyper_);
  w.diagonal().array() += hyper_.noise_variance;
  llt_ = robust_llt(w, "GpErrorModel");
  alpha_ = llt_.solve(responses_ - prior_basis(features_) * beta_);
}

GpPrediction GpErrorModel::posterior(double rho) const {
  const Vector k_star = kernel_matrix(features_, Vector::Constant(1, rho), hyper_).col(0);
  const Vector w_inv_k = llt_.solve(k_star);
  GpPrediction out;
  out.mean = beta_(0) + beta_(1) * rho + k_star.dot(alpha_);
  // The Schur complement is nonnegative in exact arithmetic; clamp roundoff.
  const double reduction = std::max(0.0, hyper_.signal_variance - k_star.dot(w_inv_k));
  out.variance = reduction + hyper_.noise_variance;
  return out;
}

std::vector<GpPrediction> GpErrorModel::posterior(const Vector& rho) const {
  std::vector<GpPrediction> out(static_cast<std::size_t>(rho.size()));
  for (Index i = 0; i < rho.size(); ++i) out[static_cast<std::size_t>(i)] = posterior(rho(i));
  return out;
}

std::pair<double, double> GpErrorModel::prediction_interval(double rho, double omega) const {
  if (!(omega > 0.0 && omega < 1.0)) {
    throw ContractViolation("prediction_interval: omega must lie in (0, 1)");
  }
  const GpPrediction p = posterior(rho);
  const double halfwidth = central_interval_halfwidth_factor(omega) * std::sqrt(p.variance);
  return {p.mean - halfwidth, p.mean + halfwidth};
}

LossKind loss_kind_from_string(const std::string& name) {
  if (name == "log_likelihood") return LossKind::log_likelihood;
  if (name == "interval") return LossKind::interval;
  if (name == "combined") return LossKind::combined;
  if (name == "ks") return LossKind::ks;
  throw ConfigError("unknown loss kind '" + name + "'");
}

const char* to_string(LossKind kind) {
  switch (kind) {
    case LossKind::log_likelihood: return "log_likelihood";
    case LossKind::interval: return "interval";
    case LossKind::combined: return "combined";
    case LossKind::ks: return "ks";
  }
  return "?";
}

namespace {

double interval_loss(std::span<const GpPrediction> predictions, std::span<const double> truths,
                     double omega) {
  const double factor = central_interval_halfwidth_factor(omega);
  std::size_t inside = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double halfwidth = factor * std::sqrt(predictions[i].variance);
    if (std::abs(truths[i] - predictions[i].mean) <= halfwidth) ++inside;
  }
  const double freq = static_cast<double>(inside) / static_cast<double>(predictions.size());
  return (omega - freq) * (omega - freq);
}

}  // namespace

double evaluate_loss(const LossSpec& loss, std::span<const GpPrediction> predictions,
                     std::span<const double> truths) {
  if (predictions.size() != truths.size()) {
    throw ContractViolation("evaluate_loss: predictions and truths disagree in length");
  }
  if (predictions.empty()) {
    throw ContractViolation("evaluate_loss: empty fold");
  }
  for (const GpPrediction& p : predictions) {
    if (!(p.variance > 0.0) || !std::isfinite(p.variance) || !std::isfinite(p.mean)) {
      throw SolverError("evaluate_loss: non-positive or non-finite predicted variance");
    }
  }
  switch (loss.kind) {
    case LossKind::log_likelihood: {
      const auto m = static_cast<double>(predictions.size());
      double sum = 0.5 * m * std::log(2.0 * std::numbers::pi);
      for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double resid = truths[i] - predictions[i].mean;
        sum += 0.5 * std::log(predictions[i].variance);
        sum += 0.5 * resid * resid / predictions[i].variance;
      }
      return sum;
    }
    case LossKind::interval: {
      if (!(loss.omega > 0.0 && loss.omega < 1.0)) {
        throw ContractViolation("evaluate_loss: interval loss needs omega in (0, 1)");
      }
      return interval_loss(predictions, truths, loss.omega);
    }
    case LossKind::combined: {
      double sum = 0.0;
      for (double omega : kCombinedLossOmegas) sum += interval_loss(predictions, truths, omega);
      return sum;
    }
    case LossKind::ks: {
      std::vector<double> z(predictions.size());
      for (std::size_t i = 0; i < predictions.size(); ++i) {
        z[i] = (truths[i] - predictions[i].mean) / std::sqrt(predictions[i].variance);
      }
      return ks_statistic(z);
    }
  }
  throw ContractViolation("evaluate_loss: unknown loss kind");
}

std::vector<GpHyperparameters> default_hyper_grid(const Vector& responses, int points_per_dim) {
  if (responses.size() < 2) {
    throw ContractViolation("default_hyper_grid: need at least two responses");
  }
  if (points_per_dim < 1) {
    throw ContractViolation("default_hyper_grid: points_per_dim must be positive");
  }
  const double mean = responses.mean();
  const double sigma_t =
      std::sqrt((responses.array() - mean).square().sum() / static_cast<double>(responses.size() - 1));
  if (!(sigma_t > 0.0)) {
    throw ContractViolation("default_hyper_grid: responses have zero spread");
  }

  const auto linspace = [points_per_dim](double lo, double hi) {
    std::vector<double> values;
    if (points_per_dim == 1) {
      values.push_back(0.5 * (lo + hi));
      return values;
    }
    for (int i = 0; i < points_per_dim; ++i) {
      values.push_back(lo + (hi - lo) * static_cast<double>(i) /
                                static_cast<double>(points_per_dim - 1));
    }
    return values;
  };

  const std::vector<double> noises = linspace(0.01 * sigma_t, 0.25 * sigma_t);
  const std::vector<double> signals = linspace(0.1 * sigma_t, sigma_t);
  const std::vector<double> lengths = linspace(0.001 * sigma_t, 0.1 * sigma_t);

  std::vector<GpHyperparameters> grid;
  grid.reserve(noises.size() * signals.size() * lengths.size());
  for (double l : lengths) {
    for (double g : signals) {
      for (double s : noises) {
        grid.push_back(GpHyperparameters{s, g, l});
      }
    }
  }
  return grid;
}

GpErrorModel cross_validate(const Vector& features, const Vector& responses,
                            const std::vector<GpHyperparameters>& grid, int k_folds,
                            const LossSpec& loss, std::uint64_t seed,
                            CrossValidationReport* report) {
  check_design(features, responses);
  if (grid.empty()) {
    throw ContractViolation("cross_validate: empty hyperparameter grid");
  }
  const Index n = features.size();
  if (k_folds < 2 || static_cast<Index>(k_folds) > n) {
    throw ContractViolation("cross_validate: k_folds must lie in [2, n]");
  }
  for (const GpHyperparameters& hyper : grid) hyper.validate();

  // Seeded shuffle, then round-robin assignment to folds.
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  Rng rng(seed);
  rng.shuffle(order);
  std::vector<std::vector<Index>> folds(static_cast<std::size_t>(k_folds));
  for (std::size_t i = 0; i < order.size(); ++i) {
    folds[i % static_cast<std::size_t>(k_folds)].push_back(order[i]);
  }

  // Precompute per-fold index sets and the squared-distance matrix shared by
  // every grid point.
  struct FoldIndices {
    std::vector<Index> train;
    std::vector<Index> validate;
  };
  std::vector<FoldIndices> fold_indices;
  for (const auto& fold : folds) {
    FoldIndices fi;
    fi.validate = fold;
    std::vector<bool> held(static_cast<std::size_t>(n), false);
    for (Index idx : fold) held[static_cast<std::size_t>(idx)] = true;
    for (Index idx = 0; idx < n; ++idx) {
      if (!held[static_cast<std::size_t>(idx)]) fi.train.push_back(idx);
    }
    if (fi.train.size() < 3) {
      throw ContractViolation("cross_validate: a fold leaves fewer than 3 training points");
    }
    fold_indices.push_back(std::move(fi));
  }

  Matrix sq_dist(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) {
      const double d = features(i) - features(j);
      sq_dist(i, j) = d * d;
    }
  }

  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> losses(grid.size(), inf);

  // Grid points sharing a length scale reuse one exponential matrix; the
  // structured default grid keeps equal length scales contiguous.
  double cached_length = -1.0;
  Matrix exp_matrix;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const GpHyperparameters& hyper = grid[g];
    if (hyper.length_scale != cached_length) {
      exp_matrix = (-sq_dist.array() / (2.0 * hyper.length_scale)).exp().matrix();
      cached_length = hyper.length_scale;
    }
    double total = 0.0;
    bool feasible = true;
    for (const FoldIndices& fi : fold_indices) {
      const auto nt = static_cast<Index>(fi.train.size());
      const auto nv = static_cast<Index>(fi.validate.size());
      Matrix w(nt, nt);
      Matrix k_cross(nv, nt);
      Vector y_train(nt);
      Matrix h_train(nt, 2);
      for (Index c = 0; c < nt; ++c) {
        const Index col = fi.train[static_cast<std::size_t>(c)];
        for (Index r = 0; r < nt; ++r) {
          w(r, c) = hyper.signal_variance * exp_matrix(fi.train[static_cast<std::size_t>(r)], col);
        }
        for (Index r = 0; r < nv; ++r) {
          k_cross(r, c) =
              hyper.signal_variance * exp_matrix(fi.validate[static_cast<std::size_t>(r)], col);
        }
        y_train(c) = responses(col);
        h_train(c, 0) = 1.0;
        h_train(c, 1) = features(col);
      }
      w.diagonal().array() += hyper.noise_variance;

      try {
        const Eigen::LLT<Matrix> llt = robust_llt(w, "cross_validate");
        const Eigen::Vector2d beta = beta_from_llt(h_train, y_train, llt);
        const Vector alpha = llt.solve(y_train - h_train * beta);
        const Matrix w_inv_cross = llt.solve(k_cross.transpose());

        std::vector<GpPrediction> predictions(static_cast<std::size_t>(nv));
        std::vector<double> truths(static_cast<std::size_t>(nv));
        for (Index r = 0; r < nv; ++r) {
          const Index row = fi.validate[static_cast<std::size_t>(r)];
          GpPrediction p;
          p.mean = beta(0) + beta(1) * features(row) + k_cross.row(r).dot(alpha);
          const double reduction =
              std::max(0.0, hyper.signal_variance - k_cross.row(r).dot(w_inv_cross.col(r)));
          p.variance = reduction + hyper.noise_variance;
          predictions[static_cast<std::size_t>(r)] = p;
          truths[static_cast<std::size_t>(r)] = responses(row);
        }
        const double fold_loss = evaluate_loss(loss, predictions, truths);
        if (!std::isfinite(fold_loss)) {
          feasible = false;
          break;
        }
        total += fold_loss;
      } catch (const SolverError&) {
        feasible = false;
        break;
      } catch (const ContractViolation&) {
        feasible = false;
        break;
      }
    }
    if (feasible) {
      losses[g] = total / static_cast<double>(k_folds);
    }
  }

  std::size_t best = 0;
  double best_loss = inf;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    if (losses[g] < best_loss) {  // strict: the first minimum wins ties
      best_loss = losses[g];
      best = g;
    }
  }
  if (!std::isfinite(best_loss)) {
    throw SolverError("cross_validate: every hyperparameter grid point was infeasible");
  }

  if (report != nullptr) {
    report->losses = std::move(losses);
    report->selected = best;
    report->folds = std::move(folds);
  }
  return GpErrorModel::fit(features, responses, grid[best]);
}

}  // namespace romes
