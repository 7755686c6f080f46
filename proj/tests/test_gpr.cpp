#include "romes/gpr.hpp"

#include "romes/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace romes;

namespace {

/// Reference inverse error function via bisection on std::erf.
double erf_inv_bisect(double y) {
  double lo = -7.0;
  double hi = 7.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (std::erf(mid) < y ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

struct RandomInstance {
  Vector features;
  Vector responses;
  GpHyperparameters hyper;
};

RandomInstance random_instance(Rng& rng, Index count) {
  RandomInstance inst;
  inst.features.resize(count);
  inst.responses.resize(count);
  for (Index i = 0; i < count; ++i) {
    inst.features(i) = 4.0 * rng.uniform01() - 2.0;
    inst.responses(i) = std::sin(2.0 * inst.features(i)) + 0.3 * rng.gaussian();
  }
  inst.hyper.noise_variance = 1e-4 + 0.5 * rng.uniform01();
  inst.hyper.signal_variance = 0.2 + 2.8 * rng.uniform01();
  inst.hyper.length_scale = 0.05 + 1.95 * rng.uniform01();
  return inst;
}

}  // namespace

TEST_CASE("kernel matrix matches hand values") {
  GpHyperparameters hyper{1.0, 1.0, 1.0};
  const Vector zero = Vector::Zero(1);
  CHECK(kernel_matrix(zero, zero, hyper)(0, 0) == doctest::Approx(1.0).epsilon(1e-15));

  hyper = GpHyperparameters{1.0, 2.0, 0.5};
  Vector a(1), b(1);
  a << 0.0;
  b << 1.0;
  // gamma * exp(-d^2 / (2 l)) = 2 exp(-1)
  CHECK(kernel_matrix(a, b, hyper)(0, 0) == doctest::Approx(0.7357588823428847).epsilon(1e-14));

  // Distance 20 sqrt(l): entry gamma e^{-200} vanishes.
  b << 20.0 * std::sqrt(hyper.length_scale);
  a << 0.0;
  CHECK(kernel_matrix(a, b, hyper)(0, 0) < 1e-12);

  Rng rng(3);
  Vector f(6);
  for (Index i = 0; i < f.size(); ++i) f(i) = rng.gaussian();
  const Matrix k = kernel_matrix(f, f, hyper);
  CHECK((k - k.transpose()).lpNorm<Eigen::Infinity>() <= 1e-15);
  CHECK_THROWS_AS(kernel_matrix(f, f, GpHyperparameters{0.0, 1.0, 1.0}), ContractViolation);
}

TEST_CASE("exactly linear responses recover their coefficients") {
  Vector f(8);
  f << -1.0, -0.4, 0.0, 0.3, 0.9, 1.4, 2.0, 2.6;
  const Vector y = 0.7 - 1.3 * f.array();
  const GpHyperparameters hyper{0.3, 1.5, 0.8};
  const Eigen::Vector2d beta = fit_beta_mle(f, y, hyper);
  CHECK(beta(0) == doctest::Approx(0.7).epsilon(1e-8));
  CHECK(beta(1) == doctest::Approx(-1.3).epsilon(1e-8));

  const Eigen::Vector2d zero_beta = fit_beta_mle(f, Vector(Vector::Zero(8)), hyper);
  CHECK(zero_beta.lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("beta matches a dense normal-equation oracle") {
  Rng rng(11);
  const RandomInstance inst = random_instance(rng, 14);
  const Eigen::Vector2d beta = fit_beta_mle(inst.features, inst.responses, inst.hyper);

  Matrix w = kernel_matrix(inst.features, inst.features, inst.hyper);
  w.diagonal().array() += inst.hyper.noise_variance;
  Matrix h(inst.features.size(), 2);
  h.col(0).setOnes();
  h.col(1) = inst.features;
  const Matrix w_inv = w.inverse();
  const Eigen::Matrix2d normal = h.transpose() * w_inv * h;
  const Eigen::Vector2d oracle = normal.inverse() * (h.transpose() * w_inv * inst.responses);
  CHECK((beta - oracle).lpNorm<Eigen::Infinity>() <= 1e-8 * (1.0 + oracle.norm()));

  // The normal-equation residual itself is tiny.
  const Eigen::Vector2d residual = h.transpose() * (w_inv * (inst.responses - h * beta));
  CHECK(residual.norm() <= 1e-8 * (h.transpose() * (w_inv * inst.responses)).norm());
}

TEST_CASE("degenerate designs are rejected") {
  const GpHyperparameters hyper{0.1, 1.0, 1.0};
  Vector two(2), same(5), y5(5);
  two << 0.0, 1.0;
  same.setConstant(0.3);
  y5 << 1, 2, 3, 4, 5;
  CHECK_THROWS_AS(fit_beta_mle(two, Vector(Vector::Zero(2)), hyper), ContractViolation);
  CHECK_THROWS_AS(fit_beta_mle(same, y5, hyper), ContractViolation);
  CHECK_THROWS_AS(GpErrorModel::fit(same, y5, hyper), ContractViolation);
}

TEST_CASE("posterior equals brute-force joint-Gaussian conditioning") {
  Rng rng(29);
  for (int instance = 0; instance < 50; ++instance) {
    const Index count = 5 + static_cast<Index>(rng.below(16));  // up to 20 points
    const RandomInstance inst = random_instance(rng, count);
    const GpErrorModel model = GpErrorModel::fit(inst.features, inst.responses, inst.hyper);

    Matrix w = kernel_matrix(inst.features, inst.features, inst.hyper);
    w.diagonal().array() += inst.hyper.noise_variance;
    const Matrix w_inv = w.inverse();
    Matrix h(count, 2);
    h.col(0).setOnes();
    h.col(1) = inst.features;
    const Eigen::Vector2d beta = model.beta();

    for (int q = 0; q < 3; ++q) {
      const double rho = 5.0 * rng.uniform01() - 2.5;
      const GpPrediction p = model.posterior(rho);

      // Condition the joint Gaussian [w; v] with prior means H beta and
      // h(rho) beta, covariance [[K + s2 I, k*], [k*', k(rho,rho) + s2]].
      const Vector k_star =
          kernel_matrix(inst.features, Vector(Vector::Constant(1, rho)), inst.hyper).col(0);
      const double prior_mean = beta(0) + beta(1) * rho;
      const double prior_var =
          inst.hyper.signal_variance + inst.hyper.noise_variance;
      const double mean_oracle =
          prior_mean + k_star.dot(w_inv * (inst.responses - h * beta));
      const double var_oracle = prior_var - k_star.dot(w_inv * k_star);

      CHECK(p.mean == doctest::Approx(mean_oracle).epsilon(1e-10));
      CHECK(p.variance == doctest::Approx(var_oracle).epsilon(1e-10));
      CHECK(p.variance >= inst.hyper.noise_variance - 1e-12);
    }
  }
}

TEST_CASE("permuting the training pairs does not change the posterior") {
  Rng rng(41);
  const RandomInstance inst = random_instance(rng, 12);
  const GpErrorModel model = GpErrorModel::fit(inst.features, inst.responses, inst.hyper);

  std::vector<Index> order(12);
  for (Index i = 0; i < 12; ++i) order[static_cast<std::size_t>(i)] = i;
  rng.shuffle(order);
  Vector pf(12), py(12);
  for (Index i = 0; i < 12; ++i) {
    pf(i) = inst.features(order[static_cast<std::size_t>(i)]);
    py(i) = inst.responses(order[static_cast<std::size_t>(i)]);
  }
  const GpErrorModel permuted = GpErrorModel::fit(pf, py, inst.hyper);

  for (double rho : {-1.7, -0.2, 0.4, 1.1, 2.3}) {
    const GpPrediction a = model.posterior(rho);
    const GpPrediction b = permuted.posterior(rho);
    CHECK(a.mean == doctest::Approx(b.mean).epsilon(1e-12));
    CHECK(a.variance == doctest::Approx(b.variance).epsilon(1e-12));
  }
}

TEST_CASE("tiny noise makes the model interpolate") {
  Vector f(8);
  f << 0.0, 0.15, 0.3, 0.45, 0.6, 0.75, 0.9, 1.0;
  Vector y(8);
  for (Index i = 0; i < 8; ++i) y(i) = std::cos(3.0 * f(i));
  const GpHyperparameters hyper{1e-12, 1.0, 1.0};
  const GpErrorModel model = GpErrorModel::fit(f, y, hyper);
  for (Index i = 0; i < 8; ++i) {
    CHECK(model.posterior(f(i)).mean == doctest::Approx(y(i)).epsilon(1e-4));
  }
}

TEST_CASE("far from the data the posterior reverts to the prior") {
  Rng rng(53);
  const RandomInstance inst = random_instance(rng, 10);
  const GpErrorModel model = GpErrorModel::fit(inst.features, inst.responses, inst.hyper);
  const double rho = 1e4;
  const GpPrediction p = model.posterior(rho);
  const double prior_mean = model.beta()(0) + model.beta()(1) * rho;
  CHECK(p.mean == doctest::Approx(prior_mean).epsilon(1e-12));
  CHECK(p.variance ==
        doctest::Approx(inst.hyper.signal_variance + inst.hyper.noise_variance).epsilon(1e-12));
}

TEST_CASE("prediction intervals agree with an independent inverse-erf") {
  Vector f(6), y(6);
  f << 0.0, 0.2, 0.4, 0.6, 0.8, 1.0;
  y << 0.0, 0.5, 0.7, 0.4, 0.1, -0.2;
  const GpErrorModel model = GpErrorModel::fit(f, y, GpHyperparameters{0.05, 1.0, 0.2});
  const double rho = 0.37;
  const GpPrediction p = model.posterior(rho);
  const double std_dev = std::sqrt(p.variance);

  // Near-zero coverage collapses the interval onto the mean.
  const auto [tiny_lo, tiny_hi] = model.prediction_interval(rho, 1e-9);
  CHECK(tiny_hi - tiny_lo <= 1e-8 * std_dev);
  CHECK(0.5 * (tiny_lo + tiny_hi) == doctest::Approx(p.mean).epsilon(1e-12));

  // One-sigma identity.
  const auto [one_lo, one_hi] = model.prediction_interval(rho, 0.6826894921370859);
  CHECK(0.5 * (one_hi - one_lo) == doctest::Approx(std_dev).epsilon(1e-9));

  // omega = 0.95 against the bisection oracle.
  const auto [lo95, hi95] = model.prediction_interval(rho, 0.95);
  const double expected = std::sqrt(2.0) * std_dev * erf_inv_bisect(0.95);
  CHECK(0.5 * (hi95 - lo95) == doctest::Approx(expected).epsilon(1e-9));

  CHECK_THROWS_AS(static_cast<void>(model.prediction_interval(rho, 0.0)), ContractViolation);
  CHECK_THROWS_AS(static_cast<void>(model.prediction_interval(rho, 1.0)), ContractViolation);
}

TEST_CASE("loss functions match hand-computed values") {
  // Single point inside its interval: loss (omega - 1)^2; outside: omega^2.
  const std::vector<GpPrediction> single{GpPrediction{0.0, 1.0}};
  const std::vector<double> inside{0.1};
  const std::vector<double> outside{100.0};
  const LossSpec interval80{LossKind::interval, 0.8};
  CHECK(evaluate_loss(interval80, single, inside) == doctest::Approx(0.04).epsilon(1e-12));
  CHECK(evaluate_loss(interval80, single, outside) == doctest::Approx(0.64).epsilon(1e-12));

  // Negative log-likelihood of one observation: 0.5 log(2 pi) + 0.5 log 4 +
  // 0.5 * (3-1)^2 / 4.
  const std::vector<GpPrediction> one{GpPrediction{1.0, 4.0}};
  const std::vector<double> truth{3.0};
  CHECK(evaluate_loss(LossSpec{LossKind::log_likelihood, 0.9}, one, truth) ==
        doctest::Approx(2.112085713764618).epsilon(1e-12));

  // Zero residuals with unit variance: the empirical CDF is a step at zero.
  const std::vector<GpPrediction> flat(5, GpPrediction{2.0, 1.0});
  const std::vector<double> equal(5, 2.0);
  CHECK(evaluate_loss(LossSpec{LossKind::ks, 0.9}, flat, equal) ==
        doctest::Approx(0.5).epsilon(1e-12));

  // Combined loss is the sum of the four fixed-coverage interval losses.
  Rng rng(61);
  std::vector<GpPrediction> preds;
  std::vector<double> truths;
  for (int i = 0; i < 40; ++i) {
    preds.push_back(GpPrediction{rng.gaussian(), 0.5 + rng.uniform01()});
    truths.push_back(preds.back().mean + std::sqrt(preds.back().variance) * rng.gaussian());
  }
  double sum = 0.0;
  for (const double omega : kCombinedLossOmegas) {
    sum += evaluate_loss(LossSpec{LossKind::interval, omega}, preds, truths);
  }
  CHECK(evaluate_loss(LossSpec{LossKind::combined, 0.9}, preds, truths) ==
        doctest::Approx(sum).epsilon(1e-14));

  // Calibrated synthetic fold: observed 0.8-coverage sits near 0.8.
  std::vector<GpPrediction> calibrated(10000, GpPrediction{0.0, 1.0});
  std::vector<double> draws(10000);
  Rng draw_rng(77);
  for (double& d : draws) d = draw_rng.gaussian();
  CHECK(evaluate_loss(interval80, calibrated, draws) < 0.01);

  // Guards.
  const std::vector<GpPrediction> bad{GpPrediction{0.0, 0.0}};
  CHECK_THROWS_AS(evaluate_loss(interval80, bad, inside), SolverError);
  CHECK_THROWS_AS(evaluate_loss(interval80, std::vector<GpPrediction>{}, std::vector<double>{}),
                  ContractViolation);
  CHECK_THROWS_AS(evaluate_loss(LossSpec{LossKind::interval, 1.5}, single, inside),
                  ContractViolation);
}

TEST_CASE("default grid respects its documented ranges and ordering") {
  Vector y(6);
  y << 1.0, 2.0, 4.0, 0.5, 3.0, 2.5;
  const double mean = y.mean();
  const double sigma_t = std::sqrt((y.array() - mean).square().sum() / 5.0);

  const std::vector<GpHyperparameters> grid = default_hyper_grid(y);
  CHECK(grid.size() == 12 * 12 * 12);
  CHECK(grid.front().noise_variance == doctest::Approx(0.01 * sigma_t).epsilon(1e-14));
  CHECK(grid.front().signal_variance == doctest::Approx(0.1 * sigma_t).epsilon(1e-14));
  CHECK(grid.front().length_scale == doctest::Approx(0.001 * sigma_t).epsilon(1e-14));
  CHECK(grid.back().noise_variance == doctest::Approx(0.25 * sigma_t).epsilon(1e-14));
  CHECK(grid.back().signal_variance == doctest::Approx(sigma_t).epsilon(1e-14));
  CHECK(grid.back().length_scale == doctest::Approx(0.1 * sigma_t).epsilon(1e-14));

  // Noise varies fastest, then signal, then length scale.
  const std::vector<GpHyperparameters> small = default_hyper_grid(y, 2);
  REQUIRE(small.size() == 8);
  CHECK(small[1].noise_variance == doctest::Approx(0.25 * sigma_t).epsilon(1e-14));
  CHECK(small[1].signal_variance == doctest::Approx(small[0].signal_variance).epsilon(1e-14));
  CHECK(small[1].length_scale == doctest::Approx(small[0].length_scale).epsilon(1e-14));
  CHECK(small[2].signal_variance == doctest::Approx(sigma_t).epsilon(1e-14));
  CHECK(small[4].length_scale == doctest::Approx(0.1 * sigma_t).epsilon(1e-14));

  // A single point per dimension sits at the midpoint of each range.
  const std::vector<GpHyperparameters> mid = default_hyper_grid(y, 1);
  REQUIRE(mid.size() == 1);
  CHECK(mid[0].noise_variance == doctest::Approx(0.13 * sigma_t).epsilon(1e-14));
  CHECK(mid[0].signal_variance == doctest::Approx(0.55 * sigma_t).epsilon(1e-14));
  CHECK(mid[0].length_scale == doctest::Approx(0.0505 * sigma_t).epsilon(1e-14));

  CHECK_THROWS_AS(default_hyper_grid(Vector(Vector::Ones(5))), ContractViolation);
  CHECK_THROWS_AS(default_hyper_grid(y, 0), ContractViolation);
}

TEST_CASE("a one-point grid is returned as-is with a full-data fit") {
  Rng rng(71);
  const RandomInstance inst = random_instance(rng, 16);
  const GpHyperparameters hyper{0.02, 0.8, 0.3};
  const GpErrorModel direct = GpErrorModel::fit(inst.features, inst.responses, hyper);
  CrossValidationReport report;
  const GpErrorModel selected =
      cross_validate(inst.features, inst.responses, {hyper}, 4,
                     LossSpec{LossKind::log_likelihood, 0.9}, 5, &report);
  CHECK(report.selected == 0);
  CHECK(selected.hyper().noise_variance == hyper.noise_variance);
  CHECK((selected.beta() - direct.beta()).lpNorm<Eigen::Infinity>() <= 1e-15);
}

TEST_CASE("cross-validation reproduces a public-API fold-loss oracle") {
  Rng rng(83);
  const Index count = 24;
  const RandomInstance inst = random_instance(rng, count);
  std::vector<GpHyperparameters> grid;
  for (double l : {0.1, 0.6}) {
    for (double s : {0.01, 0.1, 0.4}) {
      grid.push_back(GpHyperparameters{s, 1.0, l});
    }
  }
  const LossSpec loss{LossKind::log_likelihood, 0.9};
  CrossValidationReport report;
  cross_validate(inst.features, inst.responses, grid, 4, loss, 17, &report);
  REQUIRE(report.folds.size() == 4);
  REQUIRE(report.losses.size() == grid.size());

  for (std::size_t g = 0; g < grid.size(); ++g) {
    double total = 0.0;
    for (const std::vector<Index>& fold : report.folds) {
      std::vector<bool> held(static_cast<std::size_t>(count), false);
      for (Index idx : fold) held[static_cast<std::size_t>(idx)] = true;
      std::vector<double> tf, ty;
      for (Index i = 0; i < count; ++i) {
        if (!held[static_cast<std::size_t>(i)]) {
          tf.push_back(inst.features(i));
          ty.push_back(inst.responses(i));
        }
      }
      const GpErrorModel fold_model =
          GpErrorModel::fit(Eigen::Map<const Vector>(tf.data(), static_cast<Index>(tf.size())),
                            Eigen::Map<const Vector>(ty.data(), static_cast<Index>(ty.size())),
                            grid[g]);
      std::vector<GpPrediction> preds;
      std::vector<double> truths;
      for (Index idx : fold) {
        preds.push_back(fold_model.posterior(inst.features(idx)));
        truths.push_back(inst.responses(idx));
      }
      total += evaluate_loss(loss, preds, truths);
    }
    CHECK(report.losses[g] == doctest::Approx(total / 4.0).epsilon(1e-10));
  }

  // The selection is the first minimum of the reported losses.
  std::size_t argmin = 0;
  for (std::size_t g = 1; g < grid.size(); ++g) {
    if (report.losses[g] < report.losses[argmin]) argmin = g;
  }
  CHECK(report.selected == argmin);
}

TEST_CASE("cross-validation is deterministic in the seed") {
  Rng rng(97);
  const RandomInstance inst = random_instance(rng, 20);
  const std::vector<GpHyperparameters> grid = default_hyper_grid(inst.responses, 3);
  const LossSpec loss{LossKind::interval, 0.8};
  CrossValidationReport first, second;
  cross_validate(inst.features, inst.responses, grid, 5, loss, 123, &first);
  cross_validate(inst.features, inst.responses, grid, 5, loss, 123, &second);
  CHECK(first.selected == second.selected);
  REQUIRE(first.losses.size() == second.losses.size());
  for (std::size_t g = 0; g < first.losses.size(); ++g) {
    CHECK(first.losses[g] == second.losses[g]);
  }
  CHECK(first.folds == second.folds);
  // The winner is never beaten by any other feasible grid point.
  for (const double l : first.losses) CHECK(first.losses[first.selected] <= l);
}

TEST_CASE("noiseless linear data is learned almost exactly") {
  Rng rng(101);
  Vector f(40), y(40);
  for (Index i = 0; i < 40; ++i) {
    f(i) = 2.0 * rng.uniform01();
    y(i) = 2.0 * f(i);
  }
  const std::vector<GpHyperparameters> grid = default_hyper_grid(y, 3);
  const GpErrorModel model = cross_validate(f, y, grid, 5,
                                            LossSpec{LossKind::log_likelihood, 0.9}, 7);
  // Held-out fraction of variance unexplained.
  double sse = 0.0, sst = 0.0;
  const double truth_mean = 2.0;  // E[2 rho] over rho in [0, 2]
  for (int i = 0; i < 50; ++i) {
    const double rho = 2.0 * rng.uniform01();
    const double truth = 2.0 * rho;
    const double err = model.posterior(rho).mean - truth;
    sse += err * err;
    sst += (truth - truth_mean) * (truth - truth_mean);
  }
  CHECK(sse / sst < 1e-6);
}

TEST_CASE("cross-validation input contracts") {
  Rng rng(103);
  const RandomInstance inst = random_instance(rng, 10);
  const GpHyperparameters hyper{0.1, 1.0, 0.5};
  CHECK_THROWS_AS(cross_validate(inst.features, inst.responses, {}, 4,
                                 LossSpec{LossKind::ks, 0.9}, 1),
                  ContractViolation);
  CHECK_THROWS_AS(cross_validate(inst.features, inst.responses, {hyper}, 1,
                                 LossSpec{LossKind::ks, 0.9}, 1),
                  ContractViolation);
  CHECK_THROWS_AS(cross_validate(inst.features, inst.responses, {hyper}, 11,
                                 LossSpec{LossKind::ks, 0.9}, 1),
                  ContractViolation);
}
