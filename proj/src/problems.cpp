#include "romes/problems.hpp"

#include <cmath>
#include <utility>

namespace romes {

// --- QoiFunctional -----------------------------------------------------------

QoiFunctional QoiFunctional::linear(std::string label, Vector gamma) {
  if (gamma.size() == 0) {
    throw ContractViolation("QoiFunctional: empty weight vector");
  }
  QoiFunctional q(Kind::linear, std::move(label));
  q.gamma_ = std::move(gamma);
  return q;
}

QoiFunctional QoiFunctional::quadratic(std::string label, Matrix m) {
  if (m.rows() == 0 || m.rows() != m.cols()) {
    throw ContractViolation("QoiFunctional: quadratic form must be square and nonempty");
  }
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw ContractViolation("QoiFunctional: quadratic form must be symmetric");
  }
  QoiFunctional q(Kind::quadratic, std::move(label));
  q.m_ = std::move(m);
  return q;
}

Index QoiFunctional::dimension() const {
  return kind_ == Kind::linear ? gamma_.size() : m_.rows();
}

const Vector& QoiFunctional::weights() const {
  if (kind_ != Kind::linear) {
    throw ContractViolation("QoiFunctional: weights() requires a linear functional");
  }
  return gamma_;
}

const Matrix& QoiFunctional::matrix() const {
  if (kind_ != Kind::quadratic) {
    throw ContractViolation("QoiFunctional: matrix() requires a quadratic functional");
  }
  return m_;
}

double QoiFunctional::evaluate(const Vector& w) const {
  if (w.size() != dimension()) {
    throw ContractViolation("QoiFunctional: state length does not match functional");
  }
  return kind_ == Kind::linear ? gamma_.dot(w) : w.dot(m_ * w);
}

double evaluate_qoi(const QoiFunctional& qoi, const Vector& w) { return qoi.evaluate(w); }

// --- FomProblem --------------------------------------------------------------

FomProblem::FomProblem(std::string name, Index dimension, ResidualKind kind, Box box,
                       std::vector<QoiFunctional> qois)
    : name_(std::move(name)),
      dimension_(dimension),
      kind_(kind),
      box_(std::move(box)),
      qois_(std::move(qois)) {}

void FomProblem::check_parameter(const Vector& mu) const {
  if (mu.size() != box_.dim()) {
    throw ContractViolation(name_ + ": parameter has length " + std::to_string(mu.size()) +
                            ", expected " + std::to_string(box_.dim()));
  }
  if (!box_.contains(mu)) {
    throw ContractViolation(name_ + ": parameter lies outside its admissible box");
  }
}

Vector FomProblem::residual(const Vector& w, const Vector& mu) const {
  check_parameter(mu);
  if (w.size() != dimension_) {
    throw ContractViolation(name_ + ": state has length " + std::to_string(w.size()) +
                            ", expected " + std::to_string(dimension_));
  }
  Vector out(dimension_);
  residual_impl(w, mu, out);
  return out;
}

Matrix FomProblem::jacobian(const Vector& w, const Vector& mu) const {
  check_parameter(mu);
  if (w.size() != dimension_) {
    throw ContractViolation(name_ + ": state has length " + std::to_string(w.size()) +
                            ", expected " + std::to_string(dimension_));
  }
  Matrix out(dimension_, dimension_);
  jacobian_impl(w, mu, out);
  return out;
}

// --- shared grid helpers -----------------------------------------------------

namespace {

/// 0-based block index of a point in the 3x3 partition of the unit square
/// (half-open blocks, last block closed at 1).
Index block_of(double x, double y) {
  const auto bx = std::min<Index>(static_cast<Index>(3.0 * x), 2);
  const auto by = std::min<Index>(static_cast<Index>(3.0 * y), 2);
  return by * 3 + bx;
}

constexpr Index kCenterBlock = 4;

/// Subdomain mean and mean-square functionals over the center block, weighted
/// by control-volume area and normalized by the covered area.
std::vector<QoiFunctional> center_block_qois(Index n, const std::function<double(Index)>& cv_area,
                                             const std::function<std::pair<double, double>(Index)>& coords) {
  Vector gamma = Vector::Zero(n);
  double total = 0.0;
  for (Index k = 0; k < n; ++k) {
    const auto [x, y] = coords(k);
    if (block_of(x, y) == kCenterBlock) {
      gamma(k) = cv_area(k);
      total += cv_area(k);
    }
  }
  gamma /= total;
  Matrix m = gamma.asDiagonal();
  std::vector<QoiFunctional> qois;
  qois.push_back(QoiFunctional::linear("center_mean", gamma));
  qois.push_back(QoiFunctional::quadratic("center_mean_square", std::move(m)));
  return qois;
}

// --- linear diffusion benchmark ----------------------------------------------

class LinearDiffusionProblem final : public FomProblem {
public:
  explicit LinearDiffusionProblem(Index m)
      : FomProblem("linear_diffusion", (m + 1) * m, ResidualKind::linear,
                   Box{Vector::Constant(9, 0.01), Vector::Constant(9, 1.0)},
                   center_block_qois(
                       (m + 1) * m, [m](Index k) { return cv_area(m, k); },
                       [m](Index k) { return node_coords(m, k); })),
        m_(m) {
    if (m < 3) {
      throw ContractViolation("linear_diffusion: grid parameter m must be at least 3");
    }
    rhs_ = Vector::Zero(dimension());
    for (Index i = 0; i <= m; ++i) {
      rhs_(index(i, 0)) = dx(i) * 1.0;  // unit inflow through the bottom edge
    }
  }

  [[nodiscard]] Matrix system_matrix(const Vector& mu) const {
    check_parameter(mu);
    return assemble(mu);
  }

  [[nodiscard]] const Vector& load_vector() const { return rhs_; }

  [[nodiscard]] Matrix h1_matrix() const override {
    Matrix theta = assemble(Vector::Ones(9));  // unit-conductivity stiffness
    for (Index i = 0; i <= m_; ++i) {
      for (Index j = 0; j < m_; ++j) {
        const Index k = index(i, j);
        theta(k, k) += cv_area(m_, k);  // lumped mass
      }
    }
    return theta;
  }

private:
  [[nodiscard]] Index index(Index i, Index j) const { return j * (m_ + 1) + i; }

  static std::pair<double, double> node_coords(Index m, Index k) {
    const double h = 1.0 / static_cast<double>(m);
    const Index i = k % (m + 1);
    const Index j = k / (m + 1);
    return {static_cast<double>(i) * h, static_cast<double>(j) * h};
  }

  [[nodiscard]] double dx(Index i) const {
    const double h = 1.0 / static_cast<double>(m_);
    return (i == 0 || i == m_) ? 0.5 * h : h;
  }

  [[nodiscard]] double dy(Index j) const {
    const double h = 1.0 / static_cast<double>(m_);
    return j == 0 ? 0.5 * h : h;
  }

  static double cv_area(Index m, Index k) {
    const double h = 1.0 / static_cast<double>(m);
    const Index i = k % (m + 1);
    const Index j = k / (m + 1);
    const double wx = (i == 0 || i == m) ? 0.5 * h : h;
    const double wy = (j == 0) ? 0.5 * h : h;
    return wx * wy;
  }

  [[nodiscard]] double kappa_at(Index i, Index j, const Vector& mu) const {
    const double h = 1.0 / static_cast<double>(m_);
    return mu(block_of(static_cast<double>(i) * h, static_cast<double>(j) * h));
  }

  static double harmonic(double a, double b) { return 2.0 * a * b / (a + b); }

  /// Finite-volume balance matrix: for each grid edge a conductance
  /// kappa_face * width / h couples the adjacent unknowns; edges into the
  /// eliminated Dirichlet row (j = m) only contribute to the diagonal.
  [[nodiscard]] Matrix assemble(const Vector& mu) const {
    const double h = 1.0 / static_cast<double>(m_);
    Matrix a = Matrix::Zero(dimension(), dimension());
    for (Index j = 0; j < m_; ++j) {
      for (Index i = 0; i <= m_; ++i) {
        const Index k = index(i, j);
        if (i < m_) {  // horizontal edge to (i+1, j)
          const double c = harmonic(kappa_at(i, j, mu), kappa_at(i + 1, j, mu)) * dy(j) / h;
          const Index nb = index(i + 1, j);
          a(k, k) += c;
          a(nb, nb) += c;
          a(k, nb) -= c;
          a(nb, k) -= c;
        }
        // vertical edge to (i, j+1); the j = m row is the Dirichlet boundary
        const double c = harmonic(kappa_at(i, j, mu), kappa_at(i, j + 1, mu)) * dx(i) / h;
        if (j + 1 < m_) {
          const Index nb = index(i, j + 1);
          a(k, k) += c;
          a(nb, nb) += c;
          a(k, nb) -= c;
          a(nb, k) -= c;
        } else {
          a(k, k) += c;
        }
      }
    }
    return a;
  }

  void residual_impl(const Vector& w, const Vector& mu, Vector& out) const override {
    out = rhs_ - assemble(mu) * w;
  }

  void jacobian_impl(const Vector&, const Vector& mu, Matrix& out) const override {
    out = -assemble(mu);
  }

  Index m_;
  Vector rhs_;
};

// --- nonlinear reaction benchmark --------------------------------------------

class NonlinearReactionProblem final : public FomProblem {
public:
  explicit NonlinearReactionProblem(Index m)
      : FomProblem("nonlinear_reaction", (m - 1) * (m - 1), ResidualKind::nonlinear,
                   Box{(Vector(3) << 0.5, 0.0, 1.0).finished(),
                       (Vector(3) << 2.0, 5.0, 3.0).finished()},
                   center_block_qois(
                       (m - 1) * (m - 1),
                       [m](Index) {
                         const double h = 1.0 / static_cast<double>(m);
                         return h * h;
                       },
                       [m](Index k) { return node_coords(m, k); })),
        m_(m) {
    if (m < 4) {
      throw ContractViolation("nonlinear_reaction: grid parameter m must be at least 4");
    }
    const Index n = dimension();
    const double h = 1.0 / static_cast<double>(m);
    stiffness_ = Matrix::Zero(n, n);
    const double s = 1.0 / (h * h);
    for (Index j = 1; j < m; ++j) {
      for (Index i = 1; i < m; ++i) {
        const Index k = index(i, j);
        stiffness_(k, k) = 4.0 * s;
        if (i > 1) stiffness_(k, index(i - 1, j)) = -s;
        if (i < m - 1) stiffness_(k, index(i + 1, j)) = -s;
        if (j > 1) stiffness_(k, index(i, j - 1)) = -s;
        if (j < m - 1) stiffness_(k, index(i, j + 1)) = -s;
      }
    }
    bump_ = Vector(n);
    // A weak source makes the cubic term negligible and the solution manifold
    // numerically one-dimensional; this amplitude keeps the reaction and
    // diffusion terms the same order of magnitude across the parameter box.
    constexpr double width = 0.15;
    constexpr double amplitude = 1000.0;
    for (Index k = 0; k < n; ++k) {
      const auto [x, y] = node_coords(m, k);
      const double r2 = (x - 0.5) * (x - 0.5) + (y - 0.5) * (y - 0.5);
      bump_(k) = amplitude * std::exp(-r2 / (2.0 * width * width));
    }
  }

  [[nodiscard]] const Matrix& stiffness() const { return stiffness_; }
  [[nodiscard]] const Vector& bump() const { return bump_; }

  [[nodiscard]] Matrix h1_matrix() const override {
    return Matrix::Identity(dimension(), dimension()) + stiffness_;
  }

private:
  [[nodiscard]] Index index(Index i, Index j) const { return (j - 1) * (m_ - 1) + (i - 1); }

  static std::pair<double, double> node_coords(Index m, Index k) {
    const double h = 1.0 / static_cast<double>(m);
    const Index i = k % (m - 1) + 1;
    const Index j = k / (m - 1) + 1;
    return {static_cast<double>(i) * h, static_cast<double>(j) * h};
  }

  void residual_impl(const Vector& w, const Vector& mu, Vector& out) const override {
    out = mu(2) * bump_ - mu(0) * (stiffness_ * w) - mu(1) * w.array().cube().matrix();
  }

  void jacobian_impl(const Vector& w, const Vector& mu, Matrix& out) const override {
    out = -mu(0) * stiffness_;
    out.diagonal() -= 3.0 * mu(1) * w.array().square().matrix();
  }

  Index m_;
  Matrix stiffness_;
  Vector bump_;
};

}  // namespace

std::unique_ptr<FomProblem> make_linear_diffusion(Index m) {
  return std::make_unique<LinearDiffusionProblem>(m);
}

std::unique_ptr<FomProblem> make_nonlinear_reaction(Index m) {
  return std::make_unique<NonlinearReactionProblem>(m);
}

std::unique_ptr<FomProblem> make_problem(const std::string& benchmark, Index m) {
  if (benchmark == "linear_diffusion") return make_linear_diffusion(m);
  if (benchmark == "nonlinear_reaction") return make_nonlinear_reaction(m);
  throw ConfigError("unknown benchmark '" + benchmark + "'");
}

// --- Newton ------------------------------------------------------------------

FomSolution newton_solve(const NewtonCallbacks& callbacks, const Vector& initial,
                         const NewtonOptions& options, const std::string& context) {
  Vector w = initial;
  Vector r = callbacks.residual(w);
  const double r0 = r.norm();
  FomSolution sol;
  if (r0 == 0.0) {
    sol.state = std::move(w);
    sol.converged = true;
    return sol;
  }
  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    const Matrix jac = callbacks.jacobian(w);
    const Vector step =
        solve_dense(jac, Vector(-r), context + ", Newton iteration " + std::to_string(iter));

    // Backtracking line search: halve the step until the squared residual
    // norm satisfies the sufficient-decrease inequality.
    const double merit = r.squaredNorm();
    double alpha = 1.0;
    bool accepted = false;
    Vector w_trial, r_trial;
    for (int halving = 0; halving <= options.max_halvings; ++halving) {
      w_trial = w + alpha * step;
      r_trial = callbacks.residual(w_trial);
      if (r_trial.squaredNorm() <= (1.0 - 2.0 * options.armijo_constant * alpha) * merit) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      sol.state = std::move(w);
      sol.newton_iterations = iter;
      sol.residual_norm = r.norm();
      sol.converged = false;
      return sol;
    }
    w = std::move(w_trial);
    r = std::move(r_trial);
    if (r.norm() <= options.tolerance * r0) {
      sol.state = std::move(w);
      sol.newton_iterations = iter;
      sol.residual_norm = r.norm();
      sol.converged = true;
      return sol;
    }
  }
  sol.state = std::move(w);
  sol.newton_iterations = options.max_iterations;
  sol.residual_norm = r.norm();
  sol.converged = false;
  return sol;
}

FomSolution solve_fom(const FomProblem& problem, const Vector& mu, const NewtonOptions& options,
                      const Vector* initial_guess) {
  problem.check_parameter(mu);
  const Vector w0 =
      initial_guess != nullptr ? *initial_guess : Vector(Vector::Zero(problem.dimension()));
  if (w0.size() != problem.dimension()) {
    throw ContractViolation(problem.name() + ": initial guess has the wrong length");
  }

  if (problem.residual_kind() == ResidualKind::linear) {
    // r(w) = b - A w: recover the affine pieces and perform one dense solve.
    const Vector b = problem.residual(Vector::Zero(problem.dimension()), mu);
    const Matrix a = -problem.jacobian(w0, mu);
    FomSolution sol;
    sol.state = solve_dense(a, b, problem.name() + ": linear solve");
    sol.newton_iterations = 1;
    sol.residual_norm = (b - a * sol.state).norm();
    sol.converged = true;
    return sol;
  }

  NewtonCallbacks callbacks{
      [&](const Vector& w) { return problem.residual(w, mu); },
      [&](const Vector& w) { return problem.jacobian(w, mu); },
  };
  FomSolution sol = newton_solve(callbacks, w0, options, problem.name());
  return sol;
}

}  // namespace romes
