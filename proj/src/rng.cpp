#include "romes/rng.hpp"

namespace romes {

bool Box::contains(const Vector& p, double tol) const {
  if (p.size() != lower.size()) return false;
  for (Index i = 0; i < p.size(); ++i) {
    if (p(i) < lower(i) - tol || p(i) > upper(i) + tol) return false;
  }
  return true;
}

Matrix sample_uniform(const Box& box, Index count, std::uint64_t seed) {
  if (box.lower.size() != box.upper.size()) {
    throw ContractViolation("sample_uniform: box bounds disagree in length");
  }
  if ((box.upper - box.lower).minCoeff() < 0.0) {
    throw ContractViolation("sample_uniform: box has lower > upper");
  }
  Rng rng(seed);
  Matrix draws(box.dim(), count);
  for (Index c = 0; c < count; ++c) {
    for (Index i = 0; i < box.dim(); ++i) {
      draws(i, c) = rng.uniform(box.lower(i), box.upper(i));
    }
  }
  return draws;
}

}  // namespace romes
