#pragma once

#include "romes/types.hpp"

#include <span>

namespace romes {

/// Standard normal cumulative distribution function.
double normal_cdf(double z);

/// Inverse of erf on (-1, 1), accurate to 1e-12 absolute (safeguarded Newton
/// on std::erf).  Throws ContractViolation outside the open interval.
double erf_inv(double y);

/// Half-width multiplier of the central probability-omega interval of a
/// Gaussian: the interval is mean +- sqrt(2)*std*erf_inv(omega).
double central_interval_halfwidth_factor(double omega);

/// Fraction of variance unexplained: mean squared prediction error divided by
/// the (biased, 1/m) variance of the truths.  Throws ContractViolation on
/// length mismatch, empty input, or zero variance.
double fraction_of_variance_unexplained(std::span<const double> truths,
                                        std::span<const double> predictions);

/// Fraction of truths falling inside the central omega-interval of the
/// Gaussian with the paired mean/variance.
double coverage_frequency(std::span<const double> means,
                          std::span<const double> variances,
                          std::span<const double> truths, double omega);

/// Kolmogorov-Smirnov statistic of standardized residuals against the
/// standard normal law: sup over the sorted sample of
/// max(|i/m - F(z_i)|, |(i-1)/m - F(z_i)|).
double ks_statistic(std::span<const double> standardized_residuals);

}  // namespace romes
