#pragma once

#include "romes/rom.hpp"
#include "romes/subspaces.hpp"
#include "romes/types.hpp"

#include <vector>

namespace romes {

enum class DualMode { shared, unique };

[[nodiscard]] constexpr const char* to_string(DualMode mode) {
  return mode == DualMode::shared ? "shared" : "unique";
}

DualMode dual_mode_from_string(const std::string& name);

/// Right-hand-side matrix -P_bar' = -Theta Phi_bar (Phi_bar' Theta Phi_bar)^{-1}
/// whose i-th column drives the i-th dual problem.
Matrix dual_rhs_matrix(const SubspaceSet& subspaces);

/// Solves the full-order dual problem
///   [dr/dw(rom_state; mu)]' y_i = -P_bar' e_i
/// for the generalized error coordinate i (0-based, i < n_bar).  The dual
/// system is linear even for nonlinear primal problems.
Vector solve_dual_fom(const FomProblem& problem, const SubspaceSet& subspaces,
                      const Vector& rom_state, const Vector& mu, Index i);

/// All n_bar full-order duals through one factorization (columns are duals).
Matrix solve_dual_fom_all(const FomProblem& problem, const SubspaceSet& subspaces,
                          const Vector& rom_state, const Vector& mu);

/// Reduced basis (or bases) for the dual states, built by POD in the
/// Euclidean metric.  `shared` pools every coordinate's dual snapshots into
/// one basis; `unique` keeps one basis per coordinate.
struct DualBasis {
  DualMode mode = DualMode::shared;
  std::vector<Matrix> bases;  ///< 1 entry (shared) or n_bar entries (unique)

  [[nodiscard]] Index n_p() const { return bases.empty() ? 0 : bases.front().cols(); }
  [[nodiscard]] const Matrix& basis_for(Index i) const {
    return mode == DualMode::shared ? bases.front() : bases.at(static_cast<std::size_t>(i));
  }
};

/// The identity basis: reduced dual solves become exact full-order solves.
DualBasis make_full_dual_basis(Index full_dim);

/// Harvests dual snapshots over the training parameters (primal ROM solve,
/// then all n_bar full-order duals at the ROM state) and compresses them with
/// Euclidean POD to n_p modes per basis.
DualBasis build_dual_reduced_basis(const FomProblem& problem, const SubspaceSet& subspaces,
                                   const Matrix& training_params, DualMode mode, Index n_p,
                                   const RomOptions& rom_options = {});

struct DualSolveResult {
  Matrix duals;                ///< N x n_bar, column i approximates dual i
  Matrix reduced_coords;       ///< n_p x n_bar generalized dual coordinates
  int factorizations = 0;      ///< reduced-system factorizations performed
};

/// Galerkin-reduced dual solves at the ROM state.  With a shared basis the
/// reduced matrix Phi_p' J' Phi_p is factorized once and reused for all n_bar
/// right-hand sides Phi_p' (-P_bar' e_i).
DualSolveResult solve_dual_rom(const FomProblem& problem, const SubspaceSet& subspaces,
                               const DualBasis& dual_basis, const Vector& rom_state,
                               const Vector& mu);

/// Dual-weighted residual indicators rho_i = y_i' r(rom_state; mu).
Vector compute_indicators(const FomProblem& problem, const Matrix& duals, const Vector& rom_state,
                          const Vector& mu);

}  // namespace romes
