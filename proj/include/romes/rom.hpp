#pragma once

#include "romes/problems.hpp"
#include "romes/subspaces.hpp"
#include "romes/types.hpp"

namespace romes {

enum class Projection { galerkin, lspg };

[[nodiscard]] constexpr const char* to_string(Projection p) {
  return p == Projection::galerkin ? "galerkin" : "lspg";
}

Projection projection_from_string(const std::string& name);

struct RomOptions {
  Projection projection = Projection::galerkin;
  double tolerance = 1e-10;  ///< relative to the initial reduced/test residual
  int max_iterations = 50;
};

struct RomSolution {
  Vector reduced_coords;  ///< length n
  Vector reconstructed;   ///< reference + Phi * reduced_coords
  double residual_norm = 0.0;  ///< Euclidean norm of the full-order residual
  int newton_iterations = 0;
  bool converged = false;
};

/// Solves the projected equations for x_ROM = x_ref + Phi x_hat.
///
/// Galerkin: Phi' r(x_ref + Phi x_hat; mu) = 0 (Newton on the reduced
/// residual).  LSPG: Gauss-Newton on min 1/2 ||r(x_ref + Phi x_hat; mu)||_2^2,
/// whose test basis is (dr/dw) Phi.  Linear problems collapse to one reduced
/// dense solve (Galerkin) or one least-squares solve (LSPG).  Both share the
/// backtracking globalization of the full-order Newton solver.
RomSolution solve_rom(const FomProblem& problem, const SubspaceSet& subspaces, const Vector& mu,
                      const RomOptions& options = {});

/// Evaluates a functional at the reconstructed reduced state.
double rom_qoi(const QoiFunctional& qoi, const RomSolution& solution);

}  // namespace romes
