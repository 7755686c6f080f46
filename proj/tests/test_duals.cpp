#include "romes/duals.hpp"

#include "romes/rng.hpp"

#include <doctest.h>

#include <memory>

using namespace romes;

namespace {

Vector mid_box(const FomProblem& problem) {
  return 0.5 * (problem.parameter_box().lower + problem.parameter_box().upper);
}

SubspaceSet make_subspaces(const FomProblem& problem, Index n, Index n_perp, std::uint64_t seed,
                           std::shared_ptr<const Metric> metric = nullptr) {
  const Matrix params = sample_uniform(problem.parameter_box(), 3 * (n + n_perp) + 4, seed);
  Matrix snapshots(problem.dimension(), params.cols());
  for (Index c = 0; c < params.cols(); ++c) {
    snapshots.col(c) = solve_fom(problem, params.col(c)).state;
  }
  if (!metric) metric = build_metric(problem, MetricKind::identity);
  return build_subspace_set(snapshots, metric, n, n_perp);
}

/// r(w; mu) = w, so the Jacobian is the identity and the dual solutions are
/// the right-hand sides themselves.
class IdentityResidualProblem final : public FomProblem {
public:
  explicit IdentityResidualProblem(Index dim)
      : FomProblem("identity_residual", dim, ResidualKind::linear,
                   Box{Vector::Zero(1), Vector::Ones(1)}, {}) {}

  [[nodiscard]] Matrix h1_matrix() const override {
    return Matrix::Identity(dimension(), dimension());
  }

protected:
  void residual_impl(const Vector& w, const Vector&, Vector& out) const override { out = w; }
  void jacobian_impl(const Vector& w, const Vector&, Matrix& out) const override {
    out = Matrix::Identity(w.size(), w.size());
  }
};

SubspaceSet random_orthonormal_subspaces(Index dim, Index n, Index n_perp, std::uint64_t seed) {
  Rng rng(seed);
  Matrix raw(dim, n + n_perp);
  for (Index i = 0; i < raw.rows(); ++i) {
    for (Index j = 0; j < raw.cols(); ++j) raw(i, j) = rng.gaussian();
  }
  const Matrix q =
      Eigen::HouseholderQR<Matrix>(raw).householderQ() * Matrix::Identity(dim, n + n_perp);
  SubspaceSet sub;
  sub.phi = q.leftCols(n);
  sub.phi_perp = q.rightCols(n_perp);
  sub.metric = std::make_shared<Metric>(MetricKind::identity, Matrix(Matrix::Identity(dim, dim)));
  sub.reference_state = Vector::Zero(dim);
  sub.singular_values = Vector::Ones(n + n_perp);
  sub.validate();
  return sub;
}

}  // namespace

TEST_CASE("dual right-hand sides satisfy the projector identity") {
  const auto problem = make_linear_diffusion(5);
  const auto metric = build_metric(*problem, MetricKind::discrete_h1);
  const SubspaceSet sub = make_subspaces(*problem, 3, 2, 11, metric);
  const Matrix rhs = dual_rhs_matrix(sub);
  REQUIRE(rhs.rows() == problem->dimension());
  REQUIRE(rhs.cols() == sub.n_bar());

  // rhs = -Theta PhiBar G^{-1}, so PhiBar' rhs = -I.
  const Matrix phi_bar = sub.combined_basis();
  const Matrix identity_check = phi_bar.transpose() * rhs;
  CHECK((identity_check + Matrix::Identity(sub.n_bar(), sub.n_bar())).norm() <= 1e-10);

  // Explicit oracle through a dense Gram inverse.
  const Matrix gram = phi_bar.transpose() * metric->matrix() * phi_bar;
  const Matrix oracle = -(metric->matrix() * phi_bar * gram.inverse());
  CHECK((rhs - oracle).norm() <= 1e-10 * oracle.norm());
}

TEST_CASE("identity Jacobian maps duals onto the projector columns") {
  const Index dim = 24;
  const IdentityResidualProblem problem(dim);
  const SubspaceSet sub = random_orthonormal_subspaces(dim, 3, 2, 4);
  const Vector mu = Vector::Constant(1, 0.5);
  const Vector state = Vector::Zero(dim);
  // Theta = I and orthonormal PhiBar make the rhs matrix -PhiBar itself.
  const Matrix phi_bar = sub.combined_basis();
  for (Index i = 0; i < sub.n_bar(); ++i) {
    const Vector y = solve_dual_fom(problem, sub, state, mu, i);
    CHECK((y + phi_bar.col(i)).lpNorm<Eigen::Infinity>() <= 1e-12);
  }
}

TEST_CASE("full-order duals match a dense multi-RHS solve") {
  const auto problem = make_linear_diffusion(5);
  const SubspaceSet sub = make_subspaces(*problem, 3, 2, 23);
  Vector mu = mid_box(*problem);
  mu(4) = 0.02;
  const RomSolution rom = solve_rom(*problem, sub, mu);
  const Matrix duals = solve_dual_fom_all(*problem, sub, rom.reconstructed, mu);

  const Matrix jt = problem->jacobian(rom.reconstructed, mu).transpose();
  const Matrix oracle = Eigen::PartialPivLU<Matrix>(jt).solve(dual_rhs_matrix(sub));
  CHECK((duals - oracle).norm() <= 1e-10 * oracle.norm());

  for (Index i = 0; i < sub.n_bar(); ++i) {
    const Vector single = solve_dual_fom(*problem, sub, rom.reconstructed, mu, i);
    CHECK((single - duals.col(i)).norm() <= 1e-12 * (1.0 + duals.col(i).norm()));
  }
  CHECK_THROWS_AS(solve_dual_fom(*problem, sub, rom.reconstructed, mu, sub.n_bar()),
                  ContractViolation);
}

TEST_CASE("nonlinear dual problems are linear solves at the ROM state") {
  const auto problem = make_nonlinear_reaction(8);
  const SubspaceSet sub = make_subspaces(*problem, 3, 1, 37);
  const Vector mu = mid_box(*problem);
  const RomSolution rom = solve_rom(*problem, sub, mu);
  REQUIRE(rom.converged);
  const Matrix duals = solve_dual_fom_all(*problem, sub, rom.reconstructed, mu);
  const Matrix jt = problem->jacobian(rom.reconstructed, mu).transpose();
  const Matrix oracle = Eigen::PartialPivLU<Matrix>(jt).solve(dual_rhs_matrix(sub));
  CHECK((duals - oracle).norm() <= 1e-10 * oracle.norm());
}

TEST_CASE("exact duals reproduce the error coordinates on a linear problem") {
  const auto problem = make_linear_diffusion(6);
  const SubspaceSet sub = make_subspaces(*problem, 3, 2, 41);
  const Matrix online = sample_uniform(problem->parameter_box(), 20, 99);
  double worst_gap = 0.0;
  double scale = 0.0;
  for (Index c = 0; c < online.cols(); ++c) {
    const Vector mu = online.col(c);
    const RomSolution rom = solve_rom(*problem, sub, mu);
    const Vector fom = solve_fom(*problem, mu).state;
    const Matrix duals = solve_dual_fom_all(*problem, sub, rom.reconstructed, mu);
    const Vector rho = compute_indicators(*problem, duals, rom.reconstructed, mu);
    const ErrorCoordinates coords = error_generalized_coordinates(sub, fom, rom.reconstructed);
    Vector exact(sub.n_bar());
    exact << coords.in_plane, coords.out_of_plane;
    worst_gap = std::max(worst_gap, (rho - exact).lpNorm<Eigen::Infinity>());
    scale = std::max(scale, exact.lpNorm<Eigen::Infinity>());
  }
  CHECK(scale > 0.0);
  CHECK(worst_gap <= 1e-8 * scale);
}

TEST_CASE("zero residual yields zero indicators") {
  const auto problem = make_linear_diffusion(4);
  const SubspaceSet sub = make_subspaces(*problem, 2, 1, 3);
  const Vector mu = mid_box(*problem);
  const Vector fom = solve_fom(*problem, mu).state;
  const Matrix duals = solve_dual_fom_all(*problem, sub, fom, mu);
  const Vector rho = compute_indicators(*problem, duals, fom, mu);
  CHECK(rho.lpNorm<Eigen::Infinity>() <= 1e-10);
}

TEST_CASE("single-parameter shared basis reproduces that parameter's duals") {
  const auto problem = make_linear_diffusion(5);
  const SubspaceSet sub = make_subspaces(*problem, 2, 1, 19);
  const Vector mu = mid_box(*problem);
  const Matrix training = mu;
  const DualBasis basis =
      build_dual_reduced_basis(*problem, sub, training, DualMode::shared, sub.n_bar());
  REQUIRE(basis.bases.size() == 1);
  CHECK((basis.bases.front().transpose() * basis.bases.front() -
         Matrix::Identity(sub.n_bar(), sub.n_bar()))
            .norm() <= 1e-10);

  const RomSolution rom = solve_rom(*problem, sub, mu);
  const Matrix full = solve_dual_fom_all(*problem, sub, rom.reconstructed, mu);
  const DualSolveResult reduced = solve_dual_rom(*problem, sub, basis, rom.reconstructed, mu);
  CHECK((reduced.duals - full).norm() <= 1e-8 * full.norm());
}

TEST_CASE("repeated training parameters collapse unique bases to normalized duals") {
  const auto problem = make_linear_diffusion(4);
  const SubspaceSet sub = make_subspaces(*problem, 2, 1, 29);
  const Vector mu = mid_box(*problem);
  Matrix training(problem->parameter_dim(), 3);
  training << mu, mu, mu;
  const DualBasis basis = build_dual_reduced_basis(*problem, sub, training, DualMode::unique, 1);
  REQUIRE(basis.bases.size() == static_cast<std::size_t>(sub.n_bar()));

  const RomSolution rom = solve_rom(*problem, sub, mu);
  const Matrix duals = solve_dual_fom_all(*problem, sub, rom.reconstructed, mu);
  for (Index i = 0; i < sub.n_bar(); ++i) {
    const Vector column = basis.basis_for(i).col(0);
    CHECK(column.norm() == doctest::Approx(1.0).epsilon(1e-10));
    const double alignment = std::abs(column.dot(duals.col(i))) / duals.col(i).norm();
    CHECK(alignment == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("the shared subspace contains every unique subspace") {
  const auto problem = make_linear_diffusion(5);
  const SubspaceSet sub = make_subspaces(*problem, 2, 1, 31);
  const Matrix training = sample_uniform(problem->parameter_box(), 4, 53);

  // Pooled numerical rank from an oracle SVD over the same snapshot set.
  Matrix pooled(problem->dimension(), sub.n_bar() * training.cols());
  for (Index c = 0; c < training.cols(); ++c) {
    const RomSolution rom = solve_rom(*problem, sub, training.col(c));
    const Matrix duals = solve_dual_fom_all(*problem, sub, rom.reconstructed, training.col(c));
    for (Index i = 0; i < sub.n_bar(); ++i) {
      pooled.col(i * training.cols() + c) = duals.col(i);
    }
  }
  Eigen::BDCSVD<Matrix> svd(pooled);
  const Vector sigma = svd.singularValues();
  Index pooled_rank = 0;
  for (Index i = 0; i < sigma.size(); ++i) {
    if (sigma(i) > 1e-10 * sigma(0)) ++pooled_rank;
  }
  REQUIRE(pooled_rank >= 3);

  const DualBasis shared =
      build_dual_reduced_basis(*problem, sub, training, DualMode::shared, pooled_rank);
  const DualBasis unique = build_dual_reduced_basis(*problem, sub, training, DualMode::unique, 2);
  for (Index i = 0; i < sub.n_bar(); ++i) {
    // Cosines of the principal angles between the subspaces.
    Eigen::BDCSVD<Matrix> angles(shared.bases.front().transpose() * unique.basis_for(i));
    CHECK(angles.singularValues().minCoeff() >= 1.0 - 1e-8);
  }
}

TEST_CASE("the full dual basis makes the reduced solve exact") {
  const auto problem = make_linear_diffusion(4);
  const SubspaceSet sub = make_subspaces(*problem, 2, 2, 43);
  Vector mu = mid_box(*problem);
  mu(0) = 0.7;
  const RomSolution rom = solve_rom(*problem, sub, mu);
  const DualBasis basis = make_full_dual_basis(problem->dimension());
  const DualSolveResult reduced = solve_dual_rom(*problem, sub, basis, rom.reconstructed, mu);
  const Matrix full = solve_dual_fom_all(*problem, sub, rom.reconstructed, mu);
  CHECK((reduced.duals - full).norm() <= 1e-9 * full.norm());
}

TEST_CASE("shared mode factorizes once, unique mode once per coordinate") {
  const auto problem = make_nonlinear_reaction(8);
  const SubspaceSet sub = make_subspaces(*problem, 2, 2, 59);
  const Matrix training = sample_uniform(problem->parameter_box(), 5, 61);
  const Vector mu = mid_box(*problem);
  const RomSolution rom = solve_rom(*problem, sub, mu);
  REQUIRE(rom.converged);

  const DualBasis shared =
      build_dual_reduced_basis(*problem, sub, training, DualMode::shared, 3);
  const DualSolveResult shared_result =
      solve_dual_rom(*problem, sub, shared, rom.reconstructed, mu);
  CHECK(shared_result.factorizations == 1);

  const DualBasis unique =
      build_dual_reduced_basis(*problem, sub, training, DualMode::unique, 3);
  const DualSolveResult unique_result =
      solve_dual_rom(*problem, sub, unique, rom.reconstructed, mu);
  CHECK(unique_result.factorizations == static_cast<int>(sub.n_bar()));
}

TEST_CASE("reduced dual residuals are orthogonal to the dual basis") {
  const auto problem = make_nonlinear_reaction(8);
  const SubspaceSet sub = make_subspaces(*problem, 2, 1, 67);
  const Matrix training = sample_uniform(problem->parameter_box(), 5, 71);
  Vector mu = mid_box(*problem);
  mu(2) = 2.5;
  const RomSolution rom = solve_rom(*problem, sub, mu);
  REQUIRE(rom.converged);

  const Matrix jt = problem->jacobian(rom.reconstructed, mu).transpose();
  const Matrix rhs = dual_rhs_matrix(sub);
  for (const DualMode mode : {DualMode::shared, DualMode::unique}) {
    CAPTURE(to_string(mode));
    const DualBasis basis = build_dual_reduced_basis(*problem, sub, training, mode, 3);
    const DualSolveResult result = solve_dual_rom(*problem, sub, basis, rom.reconstructed, mu);
    for (Index i = 0; i < sub.n_bar(); ++i) {
      const Vector residual = rhs.col(i) - jt * result.duals.col(i);
      const Vector projected = basis.basis_for(i).transpose() * residual;
      CHECK(projected.norm() <= 1e-9 * rhs.col(i).norm());
    }
  }
}

TEST_CASE("indicator error decays quadratically in the state error") {
  const auto problem = make_nonlinear_reaction(10);
  const Index count = 9;
  const Matrix params = sample_uniform(problem->parameter_box(), count, 7);
  const Vector mu_train = params.col(0);
  const Vector anchor = solve_fom(*problem, mu_train).state;

  // Anchor the affine trial space at the mu_train solution so the state error
  // goes to zero smoothly along a parameter ray into that point.
  Matrix centered(problem->dimension(), count - 1);
  for (Index c = 1; c < count; ++c) {
    centered.col(c - 1) = solve_fom(*problem, params.col(c)).state - anchor;
  }
  const Metric euclid(MetricKind::identity,
                      Matrix(Matrix::Identity(problem->dimension(), problem->dimension())));
  const PodResult modes = pod(centered, euclid, 6);
  SubspaceSet sub;
  sub.metric = build_metric(*problem, MetricKind::identity);
  sub.reference_state = anchor;
  sub.phi = modes.modes.leftCols(4);
  sub.phi_perp = modes.modes.rightCols(2);
  sub.singular_values = modes.singular_values;
  sub.validate();

  const Vector mu_far = mid_box(*problem);
  double first_gap = 0.0;
  double last_gap = 0.0;
  double max_delta = 0.0;
  double min_delta = 1e300;
  for (int k = 0; k <= 7; ++k) {
    const double t = std::pow(0.5, k);
    const Vector mu = mu_train + t * (mu_far - mu_train);
    const Vector fom = solve_fom(*problem, mu).state;
    const RomSolution rom = solve_rom(*problem, sub, mu);
    REQUIRE(rom.converged);
    const Vector delta = fom - rom.reconstructed;
    const Matrix duals = solve_dual_fom_all(*problem, sub, rom.reconstructed, mu);
    const Vector rho = compute_indicators(*problem, duals, rom.reconstructed, mu);
    const ErrorCoordinates coords = error_generalized_coordinates(sub, fom, rom.reconstructed);
    Vector exact(sub.n_bar());
    exact << coords.in_plane, coords.out_of_plane;
    const double gap = (rho - exact).lpNorm<Eigen::Infinity>();
    const double d = delta.norm();
    if (k == 0) first_gap = gap;
    last_gap = gap;
    max_delta = std::max(max_delta, d);
    min_delta = std::min(min_delta, d);
    // The second-order ratio stays bounded along the whole sequence
    // (observed ~0.03 for this frozen seed; 0.2 leaves slack).
    CHECK(gap <= 0.2 * d * d);
  }
  // The sequence actually exercises a wide range of error magnitudes and the
  // gap collapses much faster than the error itself.
  CHECK(max_delta >= 16.0 * min_delta);
  CHECK(last_gap <= 1e-2 * first_gap);
}

TEST_CASE("input validation rejects malformed dual requests") {
  const auto problem = make_linear_diffusion(4);
  const SubspaceSet sub = make_subspaces(*problem, 2, 1, 83);
  const Vector mu = mid_box(*problem);
  const Matrix training = mu;

  CHECK_THROWS_AS(build_dual_reduced_basis(*problem, sub, training, DualMode::shared, 0),
                  ContractViolation);
  CHECK_THROWS_AS(
      build_dual_reduced_basis(*problem, sub, Matrix(problem->parameter_dim(), 0),
                               DualMode::shared, 2),
      ContractViolation);

  DualBasis empty;
  const Vector state = Vector::Zero(problem->dimension());
  CHECK_THROWS_AS(solve_dual_rom(*problem, sub, empty, state, mu), ContractViolation);

  const Vector short_state = Vector::Zero(3);
  CHECK_THROWS_AS(solve_dual_fom_all(*problem, sub, short_state, mu), ContractViolation);
}

TEST_CASE("dual basis construction surfaces primal non-convergence") {
  const auto problem = make_nonlinear_reaction(8);
  const SubspaceSet sub = make_subspaces(*problem, 2, 1, 89);
  Matrix training(problem->parameter_dim(), 1);
  training.col(0) = problem->parameter_box().upper;
  RomOptions crippled;
  crippled.max_iterations = 1;
  crippled.tolerance = 1e-14;
  CHECK_THROWS_AS(
      build_dual_reduced_basis(*problem, sub, training, DualMode::shared, 2, crippled),
      SolverError);
}
