#include "romes/subspaces.hpp"

#include <cmath>
#include <utility>

namespace romes {

MetricKind metric_kind_from_string(const std::string& name) {
  if (name == "identity") return MetricKind::identity;
  if (name == "discrete_h1") return MetricKind::discrete_h1;
  throw ConfigError("unknown metric '" + name + "'");
}

Metric::Metric(MetricKind kind, Matrix theta) : kind_(kind), theta_(std::move(theta)) {
  if (theta_.rows() == 0 || theta_.rows() != theta_.cols()) {
    throw ContractViolation("Metric: weight matrix must be square and nonempty");
  }
  const double scale = std::max(1.0, theta_.cwiseAbs().maxCoeff());
  if ((theta_ - theta_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw ContractViolation("Metric: weight matrix must be symmetric");
  }
  llt_.compute(theta_);
  if (llt_.info() != Eigen::Success) {
    throw ContractViolation("Metric: weight matrix is not positive definite");
  }
}

std::shared_ptr<const Metric> build_metric(const FomProblem& problem, MetricKind kind) {
  switch (kind) {
    case MetricKind::identity:
      return std::make_shared<Metric>(
          MetricKind::identity, Matrix(Matrix::Identity(problem.dimension(), problem.dimension())));
    case MetricKind::discrete_h1:
      return std::make_shared<Metric>(MetricKind::discrete_h1, problem.h1_matrix());
    default:
      throw ContractViolation("build_metric: custom metrics are constructed directly");
  }
}

namespace {

/// Flips each column so its entry of largest magnitude is positive (first
/// occurrence wins on ties), making mode signs deterministic.
void fix_column_signs(Matrix& modes) {
  for (Index c = 0; c < modes.cols(); ++c) {
    Index at = 0;
    modes.col(c).cwiseAbs().maxCoeff(&at);
    if (modes(at, c) < 0.0) modes.col(c) = -modes.col(c);
  }
}

struct WeightedSvd {
  Matrix modes;  ///< all numerically meaningful modes, Theta-orthonormal
  Vector singular_values;
};

WeightedSvd weighted_svd(const Matrix& snapshots, const Metric& metric) {
  if (snapshots.rows() != metric.dimension()) {
    throw ContractViolation("pod: snapshot rows do not match the metric dimension");
  }
  if (snapshots.cols() == 0) {
    throw ContractViolation("pod: empty snapshot set");
  }
  const Matrix l = metric.cholesky().matrixL();
  const Matrix weighted = l.transpose() * snapshots;
  Eigen::BDCSVD<Matrix> svd(weighted, Eigen::ComputeThinU);
  WeightedSvd out;
  out.singular_values = svd.singularValues();
  // Back-substitute L^T Phi = U so that Phi' Theta Phi = I.
  out.modes = metric.cholesky().matrixU().solve(svd.matrixU());
  fix_column_signs(out.modes);
  return out;
}

Index numerical_rank(const Vector& singular_values) {
  const double cutoff = 1e-12 * singular_values(0);
  Index rank = 0;
  while (rank < singular_values.size() && singular_values(rank) > cutoff) ++rank;
  return rank;
}

}  // namespace

PodResult pod(const Matrix& snapshots, const Metric& metric, Index n) {
  if (n < 1) {
    throw ContractViolation("pod: requested mode count must be positive");
  }
  WeightedSvd svd = weighted_svd(snapshots, metric);
  const Index rank = numerical_rank(svd.singular_values);
  if (n > rank) {
    throw RankError("pod: requested " + std::to_string(n) + " modes but the snapshot set has numerical rank " +
                    std::to_string(rank));
  }
  PodResult out;
  out.modes = svd.modes.leftCols(n);
  out.singular_values = std::move(svd.singular_values);
  return out;
}

Matrix build_out_of_plane_basis(const Matrix& snapshots, const Metric& metric, Index n,
                                Index n_perp) {
  if (n < 1 || n_perp < 0) {
    throw ContractViolation("build_out_of_plane_basis: invalid mode counts");
  }
  if (n_perp == 0) {
    return Matrix(metric.dimension(), 0);
  }
  WeightedSvd svd = weighted_svd(snapshots, metric);
  const Index rank = numerical_rank(svd.singular_values);
  if (n + n_perp > rank) {
    throw RankError("build_out_of_plane_basis: " + std::to_string(n + n_perp) +
                    " modes requested but the snapshot set has numerical rank " + std::to_string(rank));
  }
  return svd.modes.middleCols(n, n_perp);
}

Matrix SubspaceSet::combined_basis() const {
  Matrix phi_bar(phi.rows(), n_bar());
  phi_bar.leftCols(n()) = phi;
  if (n_perp() > 0) phi_bar.rightCols(n_perp()) = phi_perp;
  return phi_bar;
}

Matrix SubspaceSet::combined_gram() const {
  const Matrix phi_bar = combined_basis();
  return phi_bar.transpose() * metric->matrix() * phi_bar;
}

void SubspaceSet::validate(double tol) const {
  if (!metric || metric->dimension() != phi.rows()) {
    throw ContractViolation("SubspaceSet: metric missing or of mismatched dimension");
  }
  if (reference_state.size() != phi.rows()) {
    throw ContractViolation("SubspaceSet: reference state has the wrong length");
  }
  if (n_perp() > 0 && phi_perp.rows() != phi.rows()) {
    throw ContractViolation("SubspaceSet: out-of-plane basis has mismatched rows");
  }
  const Matrix gram = combined_gram();
  const Matrix eye = Matrix::Identity(n_bar(), n_bar());
  if ((gram - eye).cwiseAbs().maxCoeff() > tol) {
    throw ContractViolation(
        "SubspaceSet: combined basis is not Theta-orthonormal (includes the "
        "cross-orthogonality Phi' Theta PhiPerp = 0)");
  }
}

SubspaceSet build_subspace_set(const Matrix& snapshots, std::shared_ptr<const Metric> metric,
                               Index n, Index n_perp) {
  if (!metric) {
    throw ContractViolation("build_subspace_set: metric must not be null");
  }
  if (n < 1 || n_perp < 0) {
    throw ContractViolation("build_subspace_set: invalid mode counts");
  }
  if (metric->dimension() != snapshots.rows()) {
    throw ContractViolation("build_subspace_set: metric dimension does not match the snapshots");
  }
  if (snapshots.cols() < 2) {
    throw ContractViolation("build_subspace_set: need at least two snapshots");
  }
  SubspaceSet sub;
  sub.reference_state = snapshots.rowwise().mean();
  const Matrix centered = snapshots.colwise() - sub.reference_state;

  WeightedSvd svd = weighted_svd(centered, *metric);
  const Index rank = numerical_rank(svd.singular_values);
  if (n + n_perp > rank) {
    throw RankError("build_subspace_set: n + n_perp = " + std::to_string(n + n_perp) +
                    " exceeds the centered snapshot rank " + std::to_string(rank));
  }
  sub.phi = svd.modes.leftCols(n);
  sub.phi_perp = svd.modes.middleCols(n, n_perp);
  sub.metric = std::move(metric);
  sub.singular_values = std::move(svd.singular_values);
  sub.validate();
  return sub;
}

Vector project_in_plane(const SubspaceSet& subspaces, const Vector& w) {
  if (w.size() != subspaces.full_dim()) {
    throw ContractViolation("project_in_plane: state has the wrong length");
  }
  const Matrix& theta = subspaces.metric->matrix();
  const Matrix gram = subspaces.phi.transpose() * theta * subspaces.phi;
  const Vector coords =
      solve_dense(gram, Vector(subspaces.phi.transpose() * (theta * w)), "project_in_plane");
  return subspaces.phi * coords;
}

ErrorCoordinates error_generalized_coordinates(const SubspaceSet& subspaces,
                                               const Vector& fom_state, const Vector& rom_state) {
  if (fom_state.size() != subspaces.full_dim() || rom_state.size() != subspaces.full_dim()) {
    throw ContractViolation("error_generalized_coordinates: state length mismatch");
  }
  const Vector delta = fom_state - rom_state;
  const Matrix& theta = subspaces.metric->matrix();
  ErrorCoordinates coords;
  {
    const Matrix gram = subspaces.phi.transpose() * theta * subspaces.phi;
    coords.in_plane = solve_dense(gram, Vector(subspaces.phi.transpose() * (theta * delta)),
                                  "error_generalized_coordinates (in-plane)");
  }
  if (subspaces.n_perp() > 0) {
    const Matrix gram = subspaces.phi_perp.transpose() * theta * subspaces.phi_perp;
    coords.out_of_plane =
        solve_dense(gram, Vector(subspaces.phi_perp.transpose() * (theta * delta)),
                    "error_generalized_coordinates (out-of-plane)");
  } else {
    coords.out_of_plane = Vector(0);
  }
  return coords;
}

}  // namespace romes
