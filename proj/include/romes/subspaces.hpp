#pragma once

#include "romes/problems.hpp"
#include "romes/types.hpp"

#include <memory>
#include <string>

namespace romes {

enum class MetricKind { identity, discrete_h1, custom };

[[nodiscard]] constexpr const char* to_string(MetricKind kind) {
  switch (kind) {
    case MetricKind::identity: return "identity";
    case MetricKind::discrete_h1: return "discrete_h1";
    default: return "custom";
  }
}

MetricKind metric_kind_from_string(const std::string& name);

/// Symmetric positive definite inner-product weight Theta with its Cholesky
/// factorization cached at construction (construction fails on a non-SPD
/// matrix).
class Metric {
public:
  Metric(MetricKind kind, Matrix theta);

  [[nodiscard]] MetricKind kind() const { return kind_; }
  [[nodiscard]] Index dimension() const { return theta_.rows(); }
  [[nodiscard]] const Matrix& matrix() const { return theta_; }
  [[nodiscard]] const Eigen::LLT<Matrix>& cholesky() const { return llt_; }

  [[nodiscard]] Vector apply(const Vector& w) const { return theta_ * w; }
  [[nodiscard]] double inner(const Vector& a, const Vector& b) const {
    return a.dot(theta_ * b);
  }
  [[nodiscard]] double norm(const Vector& w) const { return std::sqrt(inner(w, w)); }

private:
  MetricKind kind_;
  Matrix theta_;
  Eigen::LLT<Matrix> llt_;
};

/// Builds the requested metric for a problem: identity, or the problem's
/// mass-plus-stiffness H1 analog.
std::shared_ptr<const Metric> build_metric(const FomProblem& problem, MetricKind kind);

struct PodResult {
  Matrix modes;            ///< Theta-orthonormal, one column per mode
  Vector singular_values;  ///< all singular values of the weighted snapshot matrix
};

/// Proper orthogonal decomposition of a snapshot matrix (columns are
/// snapshots) in the metric's inner product, via Cholesky of Theta and an SVD
/// of L^T * snapshots.  Modes are returned with a deterministic sign (the
/// entry of largest magnitude is positive).  Throws RankError when n exceeds
/// the numerical rank (singular values below 1e-12 * sigma_max).
PodResult pod(const Matrix& snapshots, const Metric& metric, Index n);

/// POD modes n+1 .. n+n_perp of the same snapshot matrix: the leading
/// discarded directions, used as the out-of-plane basis.
Matrix build_out_of_plane_basis(const Matrix& snapshots, const Metric& metric, Index n,
                                Index n_perp);

/// Reduced subspace bundle: in-plane basis Phi (N x n), out-of-plane basis
/// PhiPerp (N x n_perp, possibly empty), both Theta-orthonormal with
/// Phi' Theta PhiPerp = 0, plus the reference state subtracted from all
/// snapshots (their mean).
struct SubspaceSet {
  Matrix phi;
  Matrix phi_perp;
  std::shared_ptr<const Metric> metric;
  Vector reference_state;
  Vector singular_values;

  [[nodiscard]] Index full_dim() const { return phi.rows(); }
  [[nodiscard]] Index n() const { return phi.cols(); }
  [[nodiscard]] Index n_perp() const { return phi_perp.cols(); }
  [[nodiscard]] Index n_bar() const { return n() + n_perp(); }

  /// [Phi PhiPerp] as one matrix.
  [[nodiscard]] Matrix combined_basis() const;

  /// Gram matrix Phi_bar' Theta Phi_bar (identity for orthonormal bases, but
  /// computed, not assumed, wherever it is inverted).
  [[nodiscard]] Matrix combined_gram() const;

  /// Checks orthonormality and the cross-orthogonality invariant to `tol`.
  void validate(double tol = 1e-10) const;
};

/// Centers the snapshots by their mean and extracts the leading n modes plus
/// the next n_perp discarded modes.
SubspaceSet build_subspace_set(const Matrix& snapshots, std::shared_ptr<const Metric> metric,
                               Index n, Index n_perp);

/// Theta-orthogonal projection of w onto range(Phi):
/// Phi (Phi' Theta Phi)^{-1} Phi' Theta w.
Vector project_in_plane(const SubspaceSet& subspaces, const Vector& w);

struct ErrorCoordinates {
  Vector in_plane;      ///< length n
  Vector out_of_plane;  ///< length n_perp
};

/// Generalized coordinates of the state error fom_state - rom_state in the
/// in-plane and out-of-plane bases (Theta-weighted least squares through the
/// respective Gram systems).
ErrorCoordinates error_generalized_coordinates(const SubspaceSet& subspaces,
                                               const Vector& fom_state, const Vector& rom_state);

}  // namespace romes
