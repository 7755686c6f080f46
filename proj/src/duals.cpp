#include "romes/duals.hpp"

#include <string>
#include <utility>

namespace romes {

DualMode dual_mode_from_string(const std::string& name) {
  if (name == "shared") return DualMode::shared;
  if (name == "unique") return DualMode::unique;
  throw ConfigError("unknown dual mode '" + name + "'");
}

Matrix dual_rhs_matrix(const SubspaceSet& subspaces) {
  const Matrix phi_bar = subspaces.combined_basis();
  const Matrix weighted = subspaces.metric->matrix() * phi_bar;
  const Matrix gram = phi_bar.transpose() * weighted;
  // -Theta Phi_bar G^{-1}, computed column-block-wise through the Gram solve.
  return -solve_dense(gram, Matrix(weighted.transpose()), "dual_rhs_matrix").transpose();
}

namespace {

void check_dual_inputs(const FomProblem& problem, const SubspaceSet& subspaces,
                       const Vector& rom_state) {
  if (subspaces.full_dim() != problem.dimension()) {
    throw ContractViolation("duals: subspace dimension does not match the problem");
  }
  if (rom_state.size() != problem.dimension()) {
    throw ContractViolation("duals: ROM state has the wrong length");
  }
}

}  // namespace

Vector solve_dual_fom(const FomProblem& problem, const SubspaceSet& subspaces,
                      const Vector& rom_state, const Vector& mu, Index i) {
  check_dual_inputs(problem, subspaces, rom_state);
  if (i < 0 || i >= subspaces.n_bar()) {
    throw ContractViolation("solve_dual_fom: coordinate index out of range");
  }
  const Matrix jt = problem.jacobian(rom_state, mu).transpose();
  const Matrix rhs = dual_rhs_matrix(subspaces);
  return solve_dense(jt, Vector(rhs.col(i)), "solve_dual_fom");
}

Matrix solve_dual_fom_all(const FomProblem& problem, const SubspaceSet& subspaces,
                          const Vector& rom_state, const Vector& mu) {
  check_dual_inputs(problem, subspaces, rom_state);
  const Matrix jt = problem.jacobian(rom_state, mu).transpose();
  return solve_dense(jt, dual_rhs_matrix(subspaces), "solve_dual_fom_all");
}

DualBasis make_full_dual_basis(Index full_dim) {
  DualBasis basis;
  basis.mode = DualMode::shared;
  basis.bases.push_back(Matrix::Identity(full_dim, full_dim));
  return basis;
}

DualBasis build_dual_reduced_basis(const FomProblem& problem, const SubspaceSet& subspaces,
                                   const Matrix& training_params, DualMode mode, Index n_p,
                                   const RomOptions& rom_options) {
  if (training_params.rows() != problem.parameter_dim() || training_params.cols() == 0) {
    throw ContractViolation("build_dual_reduced_basis: bad training parameter matrix");
  }
  if (n_p < 1) {
    throw ContractViolation("build_dual_reduced_basis: n_p must be positive");
  }
  const Index n_bar = subspaces.n_bar();
  const Index count = training_params.cols();

  // One dual snapshot per (parameter, coordinate) pair.
  std::vector<Matrix> per_coordinate(static_cast<std::size_t>(n_bar));
  for (auto& block : per_coordinate) block.resize(problem.dimension(), count);
  for (Index c = 0; c < count; ++c) {
    const Vector mu = training_params.col(c);
    const RomSolution rom = solve_rom(problem, subspaces, mu, rom_options);
    if (!rom.converged) {
      throw SolverError("build_dual_reduced_basis: ROM solve did not converge at parameter " +
                        std::to_string(c));
    }
    const Matrix duals = solve_dual_fom_all(problem, subspaces, rom.reconstructed, mu);
    for (Index i = 0; i < n_bar; ++i) {
      per_coordinate[static_cast<std::size_t>(i)].col(c) = duals.col(i);
    }
  }

  const Metric euclidean(MetricKind::identity,
                         Matrix(Matrix::Identity(problem.dimension(), problem.dimension())));
  DualBasis basis;
  basis.mode = mode;
  if (mode == DualMode::shared) {
    Matrix pooled(problem.dimension(), n_bar * count);
    for (Index i = 0; i < n_bar; ++i) {
      pooled.middleCols(i * count, count) = per_coordinate[static_cast<std::size_t>(i)];
    }
    basis.bases.push_back(pod(pooled, euclidean, n_p).modes);
  } else {
    for (Index i = 0; i < n_bar; ++i) {
      basis.bases.push_back(pod(per_coordinate[static_cast<std::size_t>(i)], euclidean, n_p).modes);
    }
  }
  return basis;
}

DualSolveResult solve_dual_rom(const FomProblem& problem, const SubspaceSet& subspaces,
                               const DualBasis& dual_basis, const Vector& rom_state,
                               const Vector& mu) {
  check_dual_inputs(problem, subspaces, rom_state);
  if (dual_basis.bases.empty()) {
    throw ContractViolation("solve_dual_rom: empty dual basis");
  }
  const Index n_bar = subspaces.n_bar();
  if (dual_basis.mode == DualMode::unique &&
      dual_basis.bases.size() != static_cast<std::size_t>(n_bar)) {
    throw ContractViolation("solve_dual_rom: unique mode needs one basis per coordinate");
  }

  const Matrix jt = problem.jacobian(rom_state, mu).transpose();
  const Matrix rhs = dual_rhs_matrix(subspaces);

  DualSolveResult result;
  result.duals.resize(problem.dimension(), n_bar);
  result.reduced_coords.resize(dual_basis.n_p(), n_bar);

  if (dual_basis.mode == DualMode::shared) {
    const Matrix& phi_p = dual_basis.bases.front();
    const Matrix reduced = phi_p.transpose() * jt * phi_p;
    // Single factorization, reused for every coordinate's right-hand side.
    Eigen::PartialPivLU<Matrix> lu(reduced);
    const Vector diag = lu.matrixLU().diagonal().cwiseAbs();
    if (diag.minCoeff() <= 1e-14 * diag.maxCoeff()) {
      throw SolverError("solve_dual_rom: reduced dual matrix is singular");
    }
    result.factorizations = 1;
    const Matrix projected_rhs = phi_p.transpose() * rhs;
    result.reduced_coords = lu.solve(projected_rhs);
    result.duals = phi_p * result.reduced_coords;
  } else {
    for (Index i = 0; i < n_bar; ++i) {
      const Matrix& phi_p = dual_basis.basis_for(i);
      if (phi_p.cols() != dual_basis.n_p()) {
        throw ContractViolation("solve_dual_rom: per-coordinate bases disagree in size");
      }
      const Matrix reduced = phi_p.transpose() * jt * phi_p;
      const Vector coords = solve_dense(reduced, Vector(phi_p.transpose() * rhs.col(i)),
                                        "solve_dual_rom (coordinate " + std::to_string(i) + ")");
      ++result.factorizations;
      result.reduced_coords.col(i) = coords;
      result.duals.col(i) = phi_p * coords;
    }
  }
  return result;
}

Vector compute_indicators(const FomProblem& problem, const Matrix& duals, const Vector& rom_state,
                          const Vector& mu) {
  if (duals.rows() != problem.dimension()) {
    throw ContractViolation("compute_indicators: dual rows do not match the problem dimension");
  }
  const Vector r = problem.residual(rom_state, mu);
  return duals.transpose() * r;
}

}  // namespace romes
