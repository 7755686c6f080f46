#include "romes/rom.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace romes {

Projection projection_from_string(const std::string& name) {
  if (name == "galerkin") return Projection::galerkin;
  if (name == "lspg") return Projection::lspg;
  throw ConfigError("unknown projection '" + name + "'");
}

namespace {

RomSolution finish(const FomProblem& problem, const SubspaceSet& subspaces, const Vector& mu,
                   Vector reduced, int iterations, bool converged) {
  RomSolution sol;
  sol.reduced_coords = std::move(reduced);
  sol.reconstructed = subspaces.reference_state + subspaces.phi * sol.reduced_coords;
  sol.residual_norm = problem.residual(sol.reconstructed, mu).norm();
  sol.newton_iterations = iterations;
  sol.converged = converged;
  return sol;
}

RomSolution solve_linear(const FomProblem& problem, const SubspaceSet& subspaces, const Vector& mu,
                         const RomOptions& options) {
  const Index n = subspaces.n();
  const Matrix a = -problem.jacobian(subspaces.reference_state, mu);
  const Vector rhs = problem.residual(subspaces.reference_state, mu);  // b - A x_ref
  if (options.projection == Projection::galerkin) {
    const Matrix reduced_a = subspaces.phi.transpose() * a * subspaces.phi;
    const Vector x_hat =
        solve_dense(reduced_a, Vector(subspaces.phi.transpose() * rhs), "solve_rom (Galerkin)");
    return finish(problem, subspaces, mu, x_hat, 1, true);
  }
  // LSPG: minimum-residual solution of A Phi x_hat = rhs in the Euclidean norm.
  const Matrix a_phi = a * subspaces.phi;
  Eigen::ColPivHouseholderQR<Matrix> qr(a_phi);
  if (qr.rank() < n) {
    throw SolverError("solve_rom (LSPG): test basis (dr/dw) Phi is rank deficient");
  }
  const Vector x_hat = qr.solve(rhs);
  return finish(problem, subspaces, mu, x_hat, 1, true);
}

/// Newton on the reduced residual g(x_hat) = Psi' r with Armijo backtracking
/// on ||g||; Galerkin fixes Psi = Phi, LSPG re-linearizes Psi = (dr/dw) Phi
/// (Gauss-Newton on the full residual, line search on ||r||_2).
RomSolution solve_nonlinear(const FomProblem& problem, const SubspaceSet& subspaces,
                            const Vector& mu, const RomOptions& options) {
  NewtonOptions newton;
  newton.tolerance = options.tolerance;
  newton.max_iterations = options.max_iterations;

  const auto reconstruct = [&](const Vector& x_hat) -> Vector {
    return subspaces.reference_state + subspaces.phi * x_hat;
  };

  if (options.projection == Projection::galerkin) {
    NewtonCallbacks callbacks{
        [&](const Vector& x_hat) -> Vector {
          return subspaces.phi.transpose() * problem.residual(reconstruct(x_hat), mu);
        },
        [&](const Vector& x_hat) -> Matrix {
          return subspaces.phi.transpose() * problem.jacobian(reconstruct(x_hat), mu) *
                 subspaces.phi;
        },
    };
    const FomSolution reduced = newton_solve(callbacks, Vector::Zero(subspaces.n()), newton,
                                             "solve_rom (Galerkin reduced Newton)");
    return finish(problem, subspaces, mu, reduced.state, reduced.newton_iterations,
                  reduced.converged);
  }

  // Gauss-Newton loop for LSPG: normal equations (Psi'Psi) d = -Psi' r with
  // the re-linearized test basis Psi = J Phi, line search on the Euclidean
  // norm of the full residual, same globalization constants as the full-order
  // Newton solver.
  Vector x_hat = Vector::Zero(subspaces.n());
  Vector r = problem.residual(reconstruct(x_hat), mu);
  Matrix psi = problem.jacobian(reconstruct(x_hat), mu) * subspaces.phi;
  double grad_norm0 = (psi.transpose() * r).norm();
  if (grad_norm0 == 0.0) {
    return finish(problem, subspaces, mu, x_hat, 0, true);
  }
  for (int iter = 1; iter <= newton.max_iterations; ++iter) {
    const Matrix normal = psi.transpose() * psi;
    const Vector step = solve_dense(normal, Vector(-psi.transpose() * r),
                                    "solve_rom (LSPG), Gauss-Newton iteration " +
                                        std::to_string(iter));
    const double merit = r.squaredNorm();
    // Directional derivative of ||r||^2 along the step; unlike a square Newton
    // step, a Gauss-Newton step cannot promise a fixed relative decrease of the
    // (generally nonzero) least-squares minimum, so the test must use it.
    const double slope = 2.0 * (psi.transpose() * r).dot(step);
    double alpha = 1.0;
    bool accepted = false;
    Vector x_trial, r_trial;
    for (int halving = 0; halving <= newton.max_halvings; ++halving) {
      x_trial = x_hat + alpha * step;
      r_trial = problem.residual(reconstruct(x_trial), mu);
      if (r_trial.squaredNorm() <= merit + newton.armijo_constant * alpha * slope) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      return finish(problem, subspaces, mu, x_hat, iter, false);
    }
    const double decrease = merit - r_trial.squaredNorm();
    x_hat = std::move(x_trial);
    r = std::move(r_trial);
    psi = problem.jacobian(reconstruct(x_hat), mu) * subspaces.phi;
    // Stationarity, three forms: gradient reduced relative to the start;
    // residual numerically orthogonal to the range of the test basis; or the
    // accepted step no longer decreases the merit beyond roundoff scale.  The
    // latter two matter when the least-squares minimum is far from zero:
    // there the gradient bottoms out at a level set by the conditioning and
    // the residual size, which can exceed a fixed fraction of the (large)
    // initial gradient.
    const double grad_norm = (psi.transpose() * r).norm();
    if (grad_norm <= newton.tolerance * grad_norm0 ||
        grad_norm <= newton.tolerance * psi.norm() * r.norm() ||
        decrease <= 1e-13 * merit) {
      return finish(problem, subspaces, mu, x_hat, iter, true);
    }
  }
  return finish(problem, subspaces, mu, x_hat, newton.max_iterations, false);
}

}  // namespace

RomSolution solve_rom(const FomProblem& problem, const SubspaceSet& subspaces, const Vector& mu,
                      const RomOptions& options) {
  problem.check_parameter(mu);
  if (subspaces.full_dim() != problem.dimension()) {
    throw ContractViolation("solve_rom: subspace dimension does not match the problem");
  }
  if (problem.residual_kind() == ResidualKind::linear) {
    return solve_linear(problem, subspaces, mu, options);
  }
  return solve_nonlinear(problem, subspaces, mu, options);
}

double rom_qoi(const QoiFunctional& qoi, const RomSolution& solution) {
  return qoi.evaluate(solution.reconstructed);
}

}  // namespace romes
