#pragma once

#include "romes/rng.hpp"
#include "romes/types.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace romes {

enum class ResidualKind { linear, nonlinear };

[[nodiscard]] constexpr const char* to_string(ResidualKind kind) {
  return kind == ResidualKind::linear ? "linear" : "nonlinear";
}

/// Output functional of the state.  Linear functionals store the weight
/// vector gamma (value = gamma' * w); quadratic ones a symmetric matrix M
/// (value = w' * M * w).
class QoiFunctional {
public:
  enum class Kind { linear, quadratic };

  static QoiFunctional linear(std::string label, Vector gamma);
  static QoiFunctional quadratic(std::string label, Matrix m);

  [[nodiscard]] Kind kind() const { return kind_; }
  [[nodiscard]] const std::string& label() const { return label_; }
  [[nodiscard]] Index dimension() const;
  [[nodiscard]] const Vector& weights() const;
  [[nodiscard]] const Matrix& matrix() const;

  [[nodiscard]] double evaluate(const Vector& w) const;

private:
  QoiFunctional(Kind kind, std::string label) : kind_(kind), label_(std::move(label)) {}

  Kind kind_;
  std::string label_;
  Vector gamma_;
  Matrix m_;
};

/// Parameterized algebraic system r(w; mu) = 0 of dimension N.
///
/// Linear problems have the affine form r(w; mu) = b(mu) - A(mu) w, so the
/// Jacobian is -A(mu) independent of w.  All queries validate dimensions and
/// the parameter box.
class FomProblem {
public:
  virtual ~FomProblem() = default;

  [[nodiscard]] Index dimension() const { return dimension_; }
  [[nodiscard]] Index parameter_dim() const { return box_.dim(); }
  [[nodiscard]] ResidualKind residual_kind() const { return kind_; }
  [[nodiscard]] const Box& parameter_box() const { return box_; }
  [[nodiscard]] const std::string& name() const { return name_; }
  [[nodiscard]] const std::vector<QoiFunctional>& qois() const { return qois_; }

  [[nodiscard]] Vector residual(const Vector& w, const Vector& mu) const;
  [[nodiscard]] Matrix jacobian(const Vector& w, const Vector& mu) const;

  /// Mass + stiffness discretization of the H1 inner product on the same
  /// unknowns (symmetric positive definite).
  [[nodiscard]] virtual Matrix h1_matrix() const = 0;

  void check_parameter(const Vector& mu) const;

protected:
  FomProblem(std::string name, Index dimension, ResidualKind kind, Box box,
             std::vector<QoiFunctional> qois);

  virtual void residual_impl(const Vector& w, const Vector& mu, Vector& out) const = 0;
  virtual void jacobian_impl(const Vector& w, const Vector& mu, Matrix& out) const = 0;

private:
  std::string name_;
  Index dimension_;
  ResidualKind kind_;
  Box box_;
  std::vector<QoiFunctional> qois_;
};

/// 2D parameterized diffusion on the unit square, node-centered finite-volume
/// five-point scheme on an (m+1)x(m+1) grid.  The conductivity is piecewise
/// constant on a 3x3 block partition with one parameter per block
/// (mu in [0.01, 1]^9), harmonically averaged at cell faces.  Top edge holds a
/// homogeneous Dirichlet condition (eliminated), the bottom edge a unit
/// normal-flux condition, the sides zero flux.  N = (m+1)*m unknowns, ordered
/// row-major from the bottom row upward.  The system matrix is SPD.
std::unique_ptr<FomProblem> make_linear_diffusion(Index m = 32);

/// 2D reaction-diffusion -div(mu1 grad u) + mu2 u^3 = f(mu3) on the unit
/// square with zero Dirichlet data, collocated on interior nodes of an
/// (m+1)x(m+1) grid (N = (m-1)^2).  The load is a fixed Gaussian bump at the
/// domain center scaled by mu3; mu1 in [0.5, 2], mu2 in [0, 5], mu3 in [1, 3].
std::unique_ptr<FomProblem> make_nonlinear_reaction(Index m = 16);

std::unique_ptr<FomProblem> make_problem(const std::string& benchmark, Index m);

struct NewtonOptions {
  double tolerance = 1e-10;   ///< relative to the residual at the initial guess
  int max_iterations = 50;
  int max_halvings = 30;      ///< line-search budget per Newton step
  double armijo_constant = 1e-4;
};

struct FomSolution {
  Vector state;
  int newton_iterations = 0;
  double residual_norm = 0.0;  ///< Euclidean norm of r at the returned state
  bool converged = false;
};

/// Solves r(w; mu) = 0.  Linear problems use one dense solve; nonlinear ones
/// a damped Newton iteration (Armijo backtracking, halving steps) declared
/// converged when ||r||_2 <= tol * ||r(w0)||_2.  Throws SolverError on a
/// singular Jacobian; a stalled line search or an exhausted iteration budget
/// returns the last iterate with converged = false.
FomSolution solve_fom(const FomProblem& problem, const Vector& mu,
                      const NewtonOptions& options = {},
                      const Vector* initial_guess = nullptr);

/// Newton loop shared by the full-order and reduced solvers:
/// given residual/Jacobian callbacks in n unknowns, iterate with Armijo
/// backtracking on the residual norm.
struct NewtonCallbacks {
  std::function<Vector(const Vector&)> residual;
  std::function<Matrix(const Vector&)> jacobian;
};

FomSolution newton_solve(const NewtonCallbacks& callbacks, const Vector& initial,
                         const NewtonOptions& options, const std::string& context);

/// Evaluates one of the problem's declared functionals (validates dimensions).
double evaluate_qoi(const QoiFunctional& qoi, const Vector& w);

}  // namespace romes
