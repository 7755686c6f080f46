#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace romes {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Violated precondition or type invariant (dimension mismatch, parameter
/// outside its box, non-orthonormal basis, ...).
class ContractViolation : public std::invalid_argument {
public:
  explicit ContractViolation(const std::string& what)
      : std::invalid_argument(what) {}
};

/// Numerical failure inside a solver: singular Jacobian, stalled line search,
/// iteration budget exhausted, failed Cholesky after the jitter retry.
class SolverError : public std::runtime_error {
public:
  explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

/// Requested basis size exceeds the numerical rank of the snapshot set.
class RankError : public std::runtime_error {
public:
  explicit RankError(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid or incomplete experiment configuration.
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Dense LU solve with a singularity guard.  Throws SolverError when the
/// factorization exposes a (numerically) singular matrix.
Vector solve_dense(const Matrix& a, const Vector& b, const std::string& context);

/// Multi-right-hand-side variant sharing a single factorization.
Matrix solve_dense(const Matrix& a, const Matrix& b, const std::string& context);

}  // namespace romes
