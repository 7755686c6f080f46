#include "romes/types.hpp"

#include <cmath>

namespace romes {

namespace {

Eigen::PartialPivLU<Matrix> checked_lu(const Matrix& a, const std::string& context) {
  if (a.rows() != a.cols()) {
    throw ContractViolation(context + ": matrix is not square");
  }
  Eigen::PartialPivLU<Matrix> lu(a);
  const Vector diag = lu.matrixLU().diagonal().cwiseAbs();
  const double dmax = diag.maxCoeff();
  if (!std::isfinite(dmax) || dmax == 0.0 || diag.minCoeff() <= 1e-14 * dmax) {
    throw SolverError(context + ": matrix is singular to working precision");
  }
  return lu;
}

}  // namespace

Vector solve_dense(const Matrix& a, const Vector& b, const std::string& context) {
  if (a.rows() != b.size()) {
    throw ContractViolation(context + ": right-hand side length mismatch");
  }
  return checked_lu(a, context).solve(b);
}

Matrix solve_dense(const Matrix& a, const Matrix& b, const std::string& context) {
  if (a.rows() != b.rows()) {
    throw ContractViolation(context + ": right-hand side row mismatch");
  }
  return checked_lu(a, context).solve(b);
}

}  // namespace romes
