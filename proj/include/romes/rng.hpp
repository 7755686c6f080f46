#pragma once

#include "romes/types.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace romes {

/// Deterministic random stream.
///
/// Wraps std::mt19937_64 (whose output sequence is fixed by the standard) and
/// generates all variates with explicit arithmetic instead of the stdlib
/// distributions, whose mapping from engine output is implementation-defined.
/// This makes every sampled set reproducible from its seed across platforms,
/// which the serialized-package replay guarantee relies on.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform draw in [0, 1) with 53 bits of resolution.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Uniform draw in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Standard normal draw via the polar Box-Muller method.
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u = 0.0, v = 0.0, s = 0.0;
    do {
      u = 2.0 * uniform01() - 1.0;
      v = 2.0 * uniform01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    have_spare_ = true;
    return u * f;
  }

  /// Uniform integer in [0, bound) by rejection (unbiased).
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return x % bound;
  }

  /// Fisher-Yates shuffle (deterministic given the seed, unlike std::shuffle).
  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::swap(values[i - 1], values[below(i)]);
    }
  }

private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

/// Axis-aligned parameter box; lower/upper must have equal length with
/// lower(i) <= upper(i).
struct Box {
  Vector lower;
  Vector upper;

  [[nodiscard]] Index dim() const { return lower.size(); }
  [[nodiscard]] bool contains(const Vector& p, double tol = 0.0) const;
};

/// Draws `count` parameter vectors uniformly in `box` (columns of the result).
Matrix sample_uniform(const Box& box, Index count, std::uint64_t seed);

}  // namespace romes
