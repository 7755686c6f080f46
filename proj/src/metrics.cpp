#include "romes/metrics.hpp"

#include <chrono>
#include <cmath>
#include <iostream>
#include <limits>
#include <utility>

namespace romes {

double fvu(const GpErrorModel& model, const Vector& features, const Vector& truths) {
  if (features.size() != truths.size() || features.size() == 0) {
    throw ContractViolation("fvu: features and truths must be nonempty and equal-length");
  }
  std::vector<double> predictions(static_cast<std::size_t>(features.size()));
  std::vector<double> observed(static_cast<std::size_t>(features.size()));
  for (Index i = 0; i < features.size(); ++i) {
    predictions[static_cast<std::size_t>(i)] = model.posterior(features(i)).mean;
    observed[static_cast<std::size_t>(i)] = truths(i);
  }
  return fraction_of_variance_unexplained(observed, predictions);
}

double validation_frequency(const GpErrorModel& model, const Vector& features,
                            const Vector& truths, double omega) {
  if (features.size() != truths.size() || features.size() == 0) {
    throw ContractViolation("validation_frequency: bad test pairs");
  }
  std::vector<double> means, variances, observed;
  means.reserve(static_cast<std::size_t>(features.size()));
  for (Index i = 0; i < features.size(); ++i) {
    const GpPrediction p = model.posterior(features(i));
    means.push_back(p.mean);
    variances.push_back(p.variance);
    observed.push_back(truths(i));
  }
  return coverage_frequency(means, variances, observed, omega);
}

double model_ks_statistic(const GpErrorModel& model, const Vector& features,
                          const Vector& truths) {
  if (features.size() != truths.size() || features.size() == 0) {
    throw ContractViolation("model_ks_statistic: bad test pairs");
  }
  std::vector<double> z(static_cast<std::size_t>(features.size()));
  for (Index i = 0; i < features.size(); ++i) {
    const GpPrediction p = model.posterior(features(i));
    z[static_cast<std::size_t>(i)] = (truths(i) - p.mean) / std::sqrt(p.variance);
  }
  return ks_statistic(z);
}

namespace {

bool column_appears_in(const Vector& column, const Matrix& set) {
  for (Index c = 0; c < set.cols(); ++c) {
    if ((set.col(c) - column).cwiseAbs().maxCoeff() == 0.0) return true;
  }
  return false;
}

void check_disjoint(const Matrix& test_params, const Provenance& provenance) {
  for (Index c = 0; c < test_params.cols(); ++c) {
    const Vector mu = test_params.col(c);
    if (column_appears_in(mu, provenance.pod_params) ||
        column_appears_in(mu, provenance.dual_params) ||
        column_appears_in(mu, provenance.romes_params)) {
      throw ContractViolation("error_metrics: test parameter " + std::to_string(c) +
                              " appears in a training set");
    }
  }
}

double safe_ratio(double num, double denom) {
  return num / std::max(denom, std::numeric_limits<double>::min());
}

}  // namespace

MetricReport error_metrics(const FomProblem& problem, const OfflinePackage& package,
                           const Matrix& test_params) {
  if (test_params.rows() != problem.parameter_dim() || test_params.cols() == 0) {
    throw ContractViolation("error_metrics: bad test parameter matrix");
  }
  check_disjoint(test_params, package.provenance);

  const SubspaceSet& sub = package.subspaces;
  const Index n = sub.n();
  const Index n_bar = sub.n_bar();
  const Matrix phi_bar = sub.combined_basis();
  const auto& qois = problem.qois();
  const auto n_qoi = static_cast<Index>(qois.size());

  MetricReport report;
  report.indicators.resize(n_bar, test_params.cols());
  report.exact_coords.resize(n_bar, test_params.cols());
  Matrix pred_means(n_bar, test_params.cols());
  Matrix pred_vars(n_bar, test_params.cols());
  Matrix qoi_fom(n_qoi, test_params.cols());
  Matrix qoi_rom(n_qoi, test_params.cols());
  Matrix qoi_corrected(n_qoi, test_params.cols());
  Vector sums = Vector::Zero(5);  // e_x, te_par, e_par, te_par_perp, e_par_perp

  Index used = 0;
  for (Index c = 0; c < test_params.cols(); ++c) {
    const Vector mu = test_params.col(c);
    Vector fom_state;
    RomSolution rom;
    DualSolveResult duals;
    try {
      const FomSolution fom = solve_fom(problem, mu, package.config.fom_options());
      rom = solve_rom(problem, sub, mu, package.config.rom_options());
      if (!fom.converged || !rom.converged) {
        throw SolverError("solve did not converge");
      }
      fom_state = fom.state;
      duals = solve_dual_rom(problem, sub, package.dual_basis, rom.reconstructed, mu);
    } catch (const SolverError& e) {
      std::cerr << "error_metrics: excluding test point " << c << ": " << e.what() << "\n";
      ++report.points_excluded;
      continue;
    }
    const Vector indicators = compute_indicators(problem, duals.duals, rom.reconstructed, mu);
    Vector means(n_bar), variances(n_bar);
    for (Index i = 0; i < n_bar; ++i) {
      const GpPrediction p =
          package.gp_models[static_cast<std::size_t>(i)].posterior(indicators(i));
      means(i) = p.mean;
      variances(i) = p.variance;
    }
    const ErrorCoordinates coords = error_generalized_coordinates(sub, fom_state, rom.reconstructed);
    Vector exact(n_bar);
    exact.head(n) = coords.in_plane;
    exact.tail(sub.n_perp()) = coords.out_of_plane;

    report.indicators.col(used) = indicators;
    report.exact_coords.col(used) = exact;
    pred_means.col(used) = means;
    pred_vars.col(used) = variances;

    const Vector delta = fom_state - rom.reconstructed;
    const double fom_norm = fom_state.norm();
    const Vector model_par = sub.phi * means.head(n);
    const Vector exact_par = sub.phi * exact.head(n);
    const Vector model_full = phi_bar * means;
    const Vector exact_full = phi_bar * exact;
    sums(0) += safe_ratio(delta.norm(), fom_norm);
    sums(1) += safe_ratio((delta - model_par).norm(), fom_norm);
    sums(2) += safe_ratio((delta - exact_par).norm(), fom_norm);
    sums(3) += safe_ratio((delta - model_full).norm(), fom_norm);
    sums(4) += safe_ratio((delta - exact_full).norm(), fom_norm);

    const Vector corrected_state = rom.reconstructed + model_full;
    for (Index q = 0; q < n_qoi; ++q) {
      const auto& functional = qois[static_cast<std::size_t>(q)];
      qoi_fom(q, used) = functional.evaluate(fom_state);
      qoi_rom(q, used) = functional.evaluate(rom.reconstructed);
      qoi_corrected(q, used) = functional.evaluate(corrected_state);
    }
    ++used;
  }
  if (used == 0) {
    throw SolverError("error_metrics: every test point failed");
  }
  report.points_used = used;
  report.indicators.conservativeResize(n_bar, used);
  report.exact_coords.conservativeResize(n_bar, used);
  pred_means.conservativeResize(n_bar, used);
  pred_vars.conservativeResize(n_bar, used);

  const auto denom = static_cast<double>(used);
  report.e_x = sums(0) / denom;
  report.te_x_par = sums(1) / denom;
  report.e_x_par = sums(2) / denom;
  report.te_x_par_perp = sums(3) / denom;
  report.e_x_par_perp = sums(4) / denom;

  report.fvu.resize(static_cast<std::size_t>(n_bar));
  report.ks.resize(static_cast<std::size_t>(n_bar));
  report.nu.resize(n_bar, 4);
  for (Index i = 0; i < n_bar; ++i) {
    std::vector<double> means_i, vars_i, truths_i, preds_i;
    for (Index c = 0; c < used; ++c) {
      means_i.push_back(pred_means(i, c));
      vars_i.push_back(pred_vars(i, c));
      truths_i.push_back(report.exact_coords(i, c));
      preds_i.push_back(pred_means(i, c));
    }
    report.fvu[static_cast<std::size_t>(i)] = fraction_of_variance_unexplained(truths_i, preds_i);
    for (int w = 0; w < 4; ++w) {
      report.nu(i, w) = coverage_frequency(means_i, vars_i, truths_i, kReportOmegas[w]);
    }
    std::vector<double> z(static_cast<std::size_t>(used));
    for (Index c = 0; c < used; ++c) {
      z[static_cast<std::size_t>(c)] = (truths_i[static_cast<std::size_t>(c)] -
                                        means_i[static_cast<std::size_t>(c)]) /
                                       std::sqrt(vars_i[static_cast<std::size_t>(c)]);
    }
    report.ks[static_cast<std::size_t>(i)] = ks_statistic(z);
  }

  report.qoi_labels.reserve(qois.size());
  for (const auto& q : qois) report.qoi_labels.push_back(q.label());
  report.e_q.resize(static_cast<std::size_t>(n_qoi));
  report.te_q.resize(static_cast<std::size_t>(n_qoi));
  for (Index q = 0; q < n_qoi; ++q) {
    double raw = 0.0, corrected = 0.0;
    for (Index c = 0; c < used; ++c) {
      const double scale = std::max(std::abs(qoi_fom(q, c)), std::numeric_limits<double>::min());
      raw += std::abs(qoi_fom(q, c) - qoi_rom(q, c)) / scale;
      corrected += std::abs(qoi_fom(q, c) - qoi_corrected(q, c)) / scale;
    }
    report.e_q[static_cast<std::size_t>(q)] = raw / denom;
    report.te_q[static_cast<std::size_t>(q)] = corrected / denom;
  }
  return report;
}

// --- Pareto study -------------------------------------------------------------

ParetoMethod pareto_method_from_string(const std::string& name) {
  if (name == "rom_only") return ParetoMethod::rom_only;
  if (name == "romes_inplane") return ParetoMethod::romes_inplane;
  if (name == "romes_full") return ParetoMethod::romes_full;
  throw ConfigError("unknown pareto method '" + name + "'");
}

double reduced_solve_ops(Index n, Index rhs_count) {
  const auto nd = static_cast<double>(n);
  return (2.0 / 3.0) * nd * nd * nd + 2.0 * static_cast<double>(rhs_count) * nd * nd;
}

std::vector<std::size_t> non_dominated_indices(
    std::span<const std::pair<double, double>> cost_error) {
  std::vector<std::size_t> front;
  for (std::size_t i = 0; i < cost_error.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < cost_error.size() && !dominated; ++j) {
      if (j == i) continue;
      const bool no_worse = cost_error[j].first <= cost_error[i].first &&
                            cost_error[j].second <= cost_error[i].second;
      const bool strictly_better = cost_error[j].first < cost_error[i].first ||
                                   cost_error[j].second < cost_error[i].second;
      dominated = no_worse && strictly_better;
    }
    if (!dominated) front.push_back(i);
  }
  return front;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

ParetoStudy pareto_study(const FomProblem& problem, const TrainingConfig& base,
                         const ParetoGrid& grid) {
  if (grid.n_values.empty() || grid.methods.empty()) {
    throw ContractViolation("pareto_study: empty configuration grid");
  }

  // Shared held-out set: FOM states, mean solve time, mean Newton iterations.
  const Matrix online_params =
      sample_uniform(problem.parameter_box(), base.sizes.online, base.seeds.online);
  Matrix fom_states(problem.dimension(), online_params.cols());
  double fom_seconds = 0.0;
  double fom_iters = 0.0;
  for (Index c = 0; c < online_params.cols(); ++c) {
    const auto start = Clock::now();
    const FomSolution sol = solve_fom(problem, online_params.col(c), base.fom_options());
    if (!sol.converged) {
      throw SolverError("pareto_study: FOM solve did not converge at online parameter " +
                        std::to_string(c));
    }
    fom_seconds += seconds_since(start);
    fom_iters += sol.newton_iterations;
    fom_states.col(c) = sol.state;
  }
  const auto online_count = static_cast<double>(online_params.cols());
  fom_seconds /= online_count;
  fom_iters /= online_count;
  const double fom_ops = fom_iters * reduced_solve_ops(problem.dimension(), 1);

  ParetoStudy study;
  for (const ParetoMethod method : grid.methods) {
    const std::vector<Index> perp_values =
        method == ParetoMethod::romes_full ? grid.n_perp_values : std::vector<Index>{0};
    const std::vector<Index> offsets =
        method == ParetoMethod::rom_only ? std::vector<Index>{0} : grid.n_p_offsets;
    for (const Index n : grid.n_values) {
      for (const Index n_perp : perp_values) {
        for (const Index offset : offsets) {
          TrainingConfig config = base;
          config.n = n;
          config.n_perp = n_perp;
          config.n_p = n + n_perp + offset;

          ParetoPoint point;
          point.method = method;
          point.n = n;
          point.n_perp = n_perp;

          double online_seconds = 0.0;
          double primal_iters = 0.0;
          double error_sum = 0.0;

          if (method == ParetoMethod::rom_only) {
            // Same POD pipeline, no duals and no error model.
            TrainingConfig pod_only = config;
            pod_only.n_perp = 0;
            const Matrix pod_params =
                sample_uniform(problem.parameter_box(), pod_only.sizes.pod, pod_only.seeds.pod);
            Matrix snapshots(problem.dimension(), pod_params.cols());
            for (Index c = 0; c < pod_params.cols(); ++c) {
              const FomSolution sol = solve_fom(problem, pod_params.col(c), base.fom_options());
              if (!sol.converged) {
                throw SolverError("pareto_study: FOM solve did not converge at snapshot " +
                                  std::to_string(c));
              }
              snapshots.col(c) = sol.state;
            }
            const SubspaceSet sub = build_subspace_set(
                snapshots, build_metric(problem, base.metric), pod_only.n, 0);
            for (Index c = 0; c < online_params.cols(); ++c) {
              const auto start = Clock::now();
              const RomSolution rom =
                  solve_rom(problem, sub, online_params.col(c), base.rom_options());
              if (!rom.converged) {
                throw SolverError("pareto_study: ROM solve did not converge");
              }
              online_seconds += seconds_since(start);
              primal_iters += rom.newton_iterations;
              error_sum += safe_ratio((fom_states.col(c) - rom.reconstructed).norm(),
                                      fom_states.col(c).norm());
            }
            point.n_p = 0;
            point.dual_ops = 0.0;
          } else {
            const OfflinePackage package = offline_train(problem, config);
            const Matrix phi_bar = package.subspaces.combined_basis();
            const Index n_bar = package.n_bar();
            for (Index c = 0; c < online_params.cols(); ++c) {
              const auto start = Clock::now();
              const RomSolution rom =
                  solve_rom(problem, package.subspaces, online_params.col(c), base.rom_options());
              if (!rom.converged) {
                throw SolverError("pareto_study: ROM solve did not converge");
              }
              const DualSolveResult duals = solve_dual_rom(
                  problem, package.subspaces, package.dual_basis, rom.reconstructed,
                  online_params.col(c));
              const Vector indicators =
                  compute_indicators(problem, duals.duals, rom.reconstructed, online_params.col(c));
              Vector means(n_bar);
              for (Index i = 0; i < n_bar; ++i) {
                means(i) = package.gp_models[static_cast<std::size_t>(i)]
                               .posterior(indicators(i))
                               .mean;
              }
              const Vector corrected = rom.reconstructed + phi_bar * means;
              online_seconds += seconds_since(start);
              primal_iters += rom.newton_iterations;
              error_sum += safe_ratio((fom_states.col(c) - corrected).norm(),
                                      fom_states.col(c).norm());
            }
            point.n_p = config.n_p;
            point.dual_ops =
                config.dual_mode == DualMode::shared
                    ? reduced_solve_ops(config.n_p, n_bar)
                    : static_cast<double>(n_bar) * reduced_solve_ops(config.n_p, 1);
          }

          point.error = error_sum / online_count;
          point.rel_wall_time = safe_ratio(online_seconds / online_count, fom_seconds);
          point.mean_primal_iters = primal_iters / online_count;
          point.primal_ops = point.mean_primal_iters * reduced_solve_ops(n, 1);
          point.fom_ops = fom_ops;
          point.rel_ops = (point.primal_ops + point.dual_ops) / fom_ops;
          study.points.push_back(point);
        }
      }
    }
  }

  // Flag the per-method fronts in the deterministic (rel_ops, error) plane.
  for (const ParetoMethod method : grid.methods) {
    std::vector<std::size_t> member_indices;
    std::vector<std::pair<double, double>> cost_error;
    for (std::size_t i = 0; i < study.points.size(); ++i) {
      if (study.points[i].method == method) {
        member_indices.push_back(i);
        cost_error.emplace_back(study.points[i].rel_ops, study.points[i].error);
      }
    }
    for (std::size_t idx : non_dominated_indices(cost_error)) {
      study.points[member_indices[idx]].on_front = true;
    }
  }
  return study;
}

}  // namespace romes
