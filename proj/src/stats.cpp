#include "romes/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace romes {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double erf_inv(double y) {
  if (!(y > -1.0 && y < 1.0)) {
    throw ContractViolation("erf_inv: argument must lie in (-1, 1)");
  }
  if (y == 0.0) return 0.0;

  // Rational seed (Giles 2010), then safeguarded Newton on erf.  The seed is
  // already good to ~1e-6; two or three Newton steps reach full precision.
  double w = -std::log((1.0 - y) * (1.0 + y));
  double x;
  if (w < 5.0) {
    w -= 2.5;
    x = 2.81022636e-08;
    x = 3.43273939e-07 + x * w;
    x = -3.5233877e-06 + x * w;
    x = -4.39150654e-06 + x * w;
    x = 0.00021858087 + x * w;
    x = -0.00125372503 + x * w;
    x = -0.00417768164 + x * w;
    x = 0.246640727 + x * w;
    x = 1.50140941 + x * w;
    x *= y;
  } else {
    w = std::sqrt(w) - 3.0;
    x = -0.000200214257;
    x = 0.000100950558 + x * w;
    x = 0.00134934322 + x * w;
    x = -0.00367342844 + x * w;
    x = 0.00573950773 + x * w;
    x = -0.0076224613 + x * w;
    x = 0.00943887047 + x * w;
    x = 1.00167406 + x * w;
    x = 2.83297682 + x * w;
    x *= y;
  }

  // Bracket for the bisection safeguard.
  double lo = x, hi = x;
  while (std::erf(lo) > y) lo -= 0.5;
  while (std::erf(hi) < y) hi += 0.5;

  const double two_over_sqrt_pi = 2.0 / std::sqrt(std::numbers::pi);
  for (int iter = 0; iter < 60; ++iter) {
    const double f = std::erf(x) - y;
    if (f > 0.0) {
      hi = x;
    } else if (f < 0.0) {
      lo = x;
    } else {
      return x;
    }
    const double step = f / (two_over_sqrt_pi * std::exp(-x * x));
    double next = x - step;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 1e-14 * std::max(1.0, std::abs(x)) && iter >= 2) {
      return next;
    }
    x = next;
  }
  return x;
}

double central_interval_halfwidth_factor(double omega) {
  return std::numbers::sqrt2 * erf_inv(omega);
}

double fraction_of_variance_unexplained(std::span<const double> truths,
                                        std::span<const double> predictions) {
  if (truths.size() != predictions.size()) {
    throw ContractViolation("fraction_of_variance_unexplained: length mismatch");
  }
  if (truths.empty()) {
    throw ContractViolation("fraction_of_variance_unexplained: empty sample");
  }
  const auto m = static_cast<double>(truths.size());
  double mean = 0.0;
  for (double t : truths) mean += t;
  mean /= m;
  double var = 0.0, mse = 0.0;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    var += (truths[i] - mean) * (truths[i] - mean);
    mse += (truths[i] - predictions[i]) * (truths[i] - predictions[i]);
  }
  if (var == 0.0) {
    throw ContractViolation("fraction_of_variance_unexplained: truths have zero variance");
  }
  return mse / var;
}

double coverage_frequency(std::span<const double> means,
                          std::span<const double> variances,
                          std::span<const double> truths, double omega) {
  if (means.size() != variances.size() || means.size() != truths.size()) {
    throw ContractViolation("coverage_frequency: length mismatch");
  }
  if (means.empty()) {
    throw ContractViolation("coverage_frequency: empty sample");
  }
  if (!(omega > 0.0 && omega < 1.0)) {
    throw ContractViolation("coverage_frequency: omega must lie in (0, 1)");
  }
  const double factor = central_interval_halfwidth_factor(omega);
  std::size_t inside = 0;
  for (std::size_t i = 0; i < means.size(); ++i) {
    if (variances[i] < 0.0) {
      throw ContractViolation("coverage_frequency: negative variance");
    }
    const double halfwidth = factor * std::sqrt(variances[i]);
    if (std::abs(truths[i] - means[i]) <= halfwidth) ++inside;
  }
  return static_cast<double>(inside) / static_cast<double>(means.size());
}

double ks_statistic(std::span<const double> standardized_residuals) {
  if (standardized_residuals.empty()) {
    throw ContractViolation("ks_statistic: empty sample");
  }
  std::vector<double> z(standardized_residuals.begin(), standardized_residuals.end());
  std::sort(z.begin(), z.end());
  const auto m = static_cast<double>(z.size());
  double sup = 0.0;
  for (std::size_t i = 1; i <= z.size(); ++i) {
    const double f = normal_cdf(z[i - 1]);
    sup = std::max(sup, std::abs(static_cast<double>(i) / m - f));
    sup = std::max(sup, std::abs(static_cast<double>(i - 1) / m - f));
  }
  return sup;
}

}  // namespace romes
