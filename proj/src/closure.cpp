#include "romes/closure.hpp"

#include <cmath>
#include <utility>

namespace romes {

VarianceWeighting variance_weighting_from_string(const std::string& name) {
  if (name == "as_written") return VarianceWeighting::as_written;
  if (name == "squared") return VarianceWeighting::squared;
  throw ConfigError("unknown variance weighting '" + name + "'");
}

namespace {

/// Annotates solver/rank failures with the offline step that raised them.
template <typename Fn>
auto run_step(const std::string& step, Fn&& fn) {
  try {
    return fn();
  } catch (const SolverError& e) {
    throw SolverError(step + ": " + e.what());
  } catch (const RankError& e) {
    throw RankError(step + ": " + e.what());
  }
}

void validate_config(const FomProblem& problem, const TrainingConfig& config) {
  if (config.n < 1 || config.n_perp < 0 || config.n_p < 1) {
    throw ContractViolation("offline_train: basis sizes must satisfy n >= 1, n_perp >= 0, n_p >= 1");
  }
  if (config.sizes.pod < 2 || config.sizes.dual < 1 || config.sizes.romes < 3) {
    throw ContractViolation("offline_train: training set sizes too small");
  }
  if (config.n + config.n_perp > problem.dimension()) {
    throw ContractViolation("offline_train: n + n_perp exceeds the problem dimension");
  }
}

}  // namespace

OfflinePackage offline_train(const FomProblem& problem, const TrainingConfig& config) {
  validate_config(problem, config);
  OfflinePackage package;
  package.config = config;
  package.provenance.seeds = config.seeds;

  // Step 1: state bases from mean-centered FOM snapshots.
  package.provenance.pod_params =
      sample_uniform(problem.parameter_box(), config.sizes.pod, config.seeds.pod);
  const std::shared_ptr<const Metric> metric = build_metric(problem, config.metric);
  package.subspaces = run_step("offline step 1 (state bases)", [&] {
    Matrix snapshots(problem.dimension(), config.sizes.pod);
    for (Index c = 0; c < config.sizes.pod; ++c) {
      const FomSolution sol =
          solve_fom(problem, package.provenance.pod_params.col(c), config.fom_options());
      if (!sol.converged) {
        throw SolverError("FOM solve did not converge at snapshot parameter " + std::to_string(c));
      }
      snapshots.col(c) = sol.state;
    }
    return build_subspace_set(snapshots, metric, config.n, config.n_perp);
  });

  // Step 2: reduced dual bases (exact identity basis when n_p spans the
  // full space).
  package.provenance.dual_params =
      sample_uniform(problem.parameter_box(), config.sizes.dual, config.seeds.dual);
  package.dual_basis = run_step("offline step 2 (dual bases)", [&] {
    if (config.n_p >= problem.dimension()) {
      return make_full_dual_basis(problem.dimension());
    }
    return build_dual_reduced_basis(problem, package.subspaces, package.provenance.dual_params,
                                    config.dual_mode, config.n_p, config.rom_options());
  });

  // Step 3: training pairs (indicator, exact generalized error coordinate).
  package.provenance.romes_params =
      sample_uniform(problem.parameter_box(), config.sizes.romes, config.seeds.romes);
  const Index n_bar = package.subspaces.n_bar();
  Matrix features(n_bar, config.sizes.romes);
  Matrix responses(n_bar, config.sizes.romes);
  run_step("offline step 3 (indicator training pairs)", [&] {
    for (Index c = 0; c < config.sizes.romes; ++c) {
      const Vector mu = package.provenance.romes_params.col(c);
      const FomSolution fom = solve_fom(problem, mu, config.fom_options());
      const RomSolution rom = solve_rom(problem, package.subspaces, mu, config.rom_options());
      if (!fom.converged || !rom.converged) {
        throw SolverError("solve did not converge at training parameter " + std::to_string(c));
      }
      const Vector& fom_state = fom.state;
      const DualSolveResult duals =
          solve_dual_rom(problem, package.subspaces, package.dual_basis, rom.reconstructed, mu);
      features.col(c) = compute_indicators(problem, duals.duals, rom.reconstructed, mu);
      const ErrorCoordinates coords =
          error_generalized_coordinates(package.subspaces, fom_state, rom.reconstructed);
      responses.col(c).head(package.subspaces.n()) = coords.in_plane;
      responses.col(c).tail(package.subspaces.n_perp()) = coords.out_of_plane;
    }
    return 0;
  });

  // Step 4: one cross-validated GP per coordinate.
  package.gp_models.reserve(static_cast<std::size_t>(n_bar));
  for (Index i = 0; i < n_bar; ++i) {
    run_step("offline step 4 (error model, coordinate " + std::to_string(i) + ")", [&] {
      const Vector f = features.row(i).transpose();
      const Vector y = responses.row(i).transpose();
      const std::vector<GpHyperparameters> grid =
          default_hyper_grid(y, config.grid_points_per_dim);
      package.gp_models.push_back(cross_validate(f, y, grid, config.cv_folds, config.loss,
                                                 config.seeds.cv + static_cast<std::uint64_t>(i)));
      return 0;
    });
  }
  return package;
}

StatisticalStateModel assemble_state_model(const Vector& rom_state, const SubspaceSet& subspaces,
                                           const Vector& coordinate_means,
                                           const Vector& coordinate_variances,
                                           VarianceWeighting weighting) {
  if (coordinate_means.size() != subspaces.n_bar() ||
      coordinate_variances.size() != subspaces.n_bar()) {
    throw ContractViolation("assemble_state_model: coordinate vectors must have length n_bar");
  }
  if (rom_state.size() != subspaces.full_dim()) {
    throw ContractViolation("assemble_state_model: ROM state has the wrong length");
  }
  if (coordinate_variances.size() > 0 && coordinate_variances.minCoeff() < 0.0) {
    throw ContractViolation("assemble_state_model: negative coordinate variance");
  }
  StatisticalStateModel model;
  model.rom_state = rom_state;
  model.coordinate_means = coordinate_means;
  model.coordinate_variances = coordinate_variances;
  const Matrix phi_bar = subspaces.combined_basis();
  model.correction_mean = phi_bar * coordinate_means;
  model.mean_state = rom_state + model.correction_mean;
  if (weighting == VarianceWeighting::squared) {
    model.entry_variance = phi_bar.cwiseProduct(phi_bar) * coordinate_variances;
  } else {
    model.entry_variance = phi_bar * coordinate_variances;
  }
  return model;
}

OnlinePrediction online_predict(const FomProblem& problem, const OfflinePackage& package,
                                const Vector& mu, Index n_samples, std::uint64_t seed) {
  if (n_samples < 1) {
    throw ContractViolation("online_predict: n_samples must be positive");
  }
  OnlinePrediction out;
  out.rom = solve_rom(problem, package.subspaces, mu, package.config.rom_options());
  if (!out.rom.converged) {
    throw SolverError("online_predict: ROM solve did not converge");
  }
  const DualSolveResult duals =
      solve_dual_rom(problem, package.subspaces, package.dual_basis, out.rom.reconstructed, mu);
  out.indicators = compute_indicators(problem, duals.duals, out.rom.reconstructed, mu);

  const Index n_bar = package.n_bar();
  if (package.gp_models.size() != static_cast<std::size_t>(n_bar)) {
    throw ContractViolation("online_predict: package carries the wrong number of GP models");
  }
  Vector means(n_bar), variances(n_bar);
  for (Index i = 0; i < n_bar; ++i) {
    const GpPrediction p =
        package.gp_models[static_cast<std::size_t>(i)].posterior(out.indicators(i));
    means(i) = p.mean;
    variances(i) = p.variance;
  }
  out.state_model = assemble_state_model(out.rom.reconstructed, package.subspaces, means,
                                         variances, package.config.variance_weighting);

  // QoI pushforward: sample coordinate draws, reconstruct, evaluate.
  const auto& qois = problem.qois();
  const auto n_qoi = static_cast<Index>(qois.size());
  const Matrix phi_bar = package.subspaces.combined_basis();
  QoiModelSample qoi;
  qoi.labels.reserve(qois.size());
  for (const QoiFunctional& q : qois) qoi.labels.push_back(q.label());
  qoi.rom_values.resize(n_qoi);
  for (Index q = 0; q < n_qoi; ++q) {
    qoi.rom_values(q) = qois[static_cast<std::size_t>(q)].evaluate(out.rom.reconstructed);
  }
  qoi.samples.resize(n_samples, n_qoi);
  Rng rng(seed);
  const Vector stds = variances.cwiseSqrt();
  Vector draw(n_bar);
  for (Index s = 0; s < n_samples; ++s) {
    for (Index i = 0; i < n_bar; ++i) draw(i) = means(i) + stds(i) * rng.gaussian();
    const Vector state = out.rom.reconstructed + phi_bar * draw;
    for (Index q = 0; q < n_qoi; ++q) {
      qoi.samples(s, q) = qois[static_cast<std::size_t>(q)].evaluate(state);
    }
  }
  qoi.sample_means = qoi.samples.colwise().mean();
  qoi.sample_variances.resize(n_qoi);
  for (Index q = 0; q < n_qoi; ++q) {
    qoi.sample_variances(q) =
        (qoi.samples.col(q).array() - qoi.sample_means(q)).square().sum() /
        static_cast<double>(std::max<Index>(1, n_samples - 1));
  }
  qoi.closed_form.resize(qois.size());
  for (Index q = 0; q < n_qoi; ++q) {
    const QoiFunctional& functional = qois[static_cast<std::size_t>(q)];
    if (functional.kind() == QoiFunctional::Kind::linear) {
      const Vector weights_in_coords = phi_bar.transpose() * functional.weights();
      GpPrediction p;
      p.mean = qoi.rom_values(q) + weights_in_coords.dot(means);
      p.variance = weights_in_coords.array().square().matrix().dot(variances);
      qoi.closed_form[static_cast<std::size_t>(q)] = p;
    }
  }
  out.qoi = std::move(qoi);
  return out;
}

}  // namespace romes
