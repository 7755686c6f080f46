#include "romes/experiment.hpp"

#include "romes/io.hpp"
#include "romes/metrics.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <vector>

namespace romes {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct ResolvedRun {
  ExperimentConfig config;
  fs::path out_dir;
  bool quiet = false;
};

ResolvedRun resolve(const ExperimentConfig& config, const RunOverrides& overrides) {
  ResolvedRun run;
  run.config = config;
  if (overrides.seed_override) {
    Seeds& seeds = run.config.training.seeds;
    seeds.pod = *overrides.seed_override;
    seeds.dual = *overrides.seed_override + 1;
    seeds.romes = *overrides.seed_override + 2;
    seeds.online = *overrides.seed_override + 3;
    seeds.cv = *overrides.seed_override + 4;
  }
  run.out_dir = overrides.output_dir.value_or(run.config.output_dir);
  run.quiet = overrides.quiet;
  return run;
}

json config_to_json(const ExperimentConfig& config) {
  const TrainingConfig& t = config.training;
  json j;
  j["schema_version"] = kConfigSchemaVersion;
  j["benchmark"] = config.benchmark;
  j["grid_m"] = config.grid_m;
  j["metric"] = to_string(t.metric);
  j["n"] = t.n;
  j["n_perp"] = t.n_perp;
  j["n_p"] = t.n_p;
  j["dual_mode"] = to_string(t.dual_mode);
  j["projection"] = to_string(t.projection);
  j["loss"] = {{"kind", to_string(t.loss.kind)}, {"omega", t.loss.omega}};
  j["cv_folds"] = t.cv_folds;
  j["grid_points_per_dim"] = t.grid_points_per_dim;
  j["set_sizes"] = {{"pod", t.sizes.pod},
                    {"dual", t.sizes.dual},
                    {"romes", t.sizes.romes},
                    {"online", t.sizes.online}};
  j["seeds"] = {{"pod", t.seeds.pod},
                {"dual", t.seeds.dual},
                {"romes", t.seeds.romes},
                {"online", t.seeds.online},
                {"cv", t.seeds.cv}};
  j["solver"] = {{"fom_tolerance", t.fom_tolerance},
                 {"rom_tolerance", t.rom_tolerance},
                 {"max_iterations", t.max_iterations}};
  j["variance_weighting"] = to_string(t.variance_weighting);
  j["qoi_samples"] = t.qoi_samples;
  if (config.pareto) {
    json p;
    p["n_values"] = config.pareto->n_values;
    p["n_p_offsets"] = config.pareto->n_p_offsets;
    p["n_perp_values"] = config.pareto->n_perp_values;
    json methods = json::array();
    for (const ParetoMethod m : config.pareto->methods) methods.push_back(to_string(m));
    p["methods"] = methods;
    j["pareto"] = p;
  }
  j["output_dir"] = config.output_dir;
  return j;
}

void write_summary(const fs::path& out_dir, const ExperimentConfig& config,
                   const std::string& command, const std::vector<std::string>& files) {
  json summary;
  summary["version"] = kVersionString;
  summary["command"] = command;
  summary["resolved_config"] = config_to_json(config);
  summary["files"] = files;
  std::ofstream out(out_dir / "summary.json");
  if (!out) {
    throw ConfigError("cannot open '" + (out_dir / "summary.json").string() + "' for writing");
  }
  out << summary.dump(2) << '\n';
}

void append_metric(std::ofstream& out, const std::string& name, double value) {
  out << name << ',' << format_double(value) << '\n';
}

}  // namespace

void run_experiment(const ExperimentConfig& raw_config, const RunOverrides& overrides) {
  const ResolvedRun run = resolve(raw_config, overrides);
  const ExperimentConfig& config = run.config;
  const auto log = [&](const std::string& message) {
    if (!run.quiet) std::cout << message << std::endl;
  };

  fs::create_directories(run.out_dir);
  const std::unique_ptr<FomProblem> problem = make_problem(config.benchmark, config.grid_m);
  log("training on " + config.benchmark + " (N = " + std::to_string(problem->dimension()) + ")");
  const OfflinePackage package = offline_train(*problem, config.training);

  log("evaluating " + std::to_string(config.training.sizes.online) + " held-out points");
  const Matrix online_params = sample_uniform(problem->parameter_box(),
                                              config.training.sizes.online,
                                              config.training.seeds.online);
  const MetricReport report = error_metrics(*problem, package, online_params);

  std::vector<std::string> files;
  const auto declare = [&files](const fs::path& p) { files.push_back(p.filename().string()); };

  save_package(package, run.out_dir / "package");
  files.push_back("package");

  // Per-coordinate scatter (training and held-out pairs) and the posterior
  // mean with its 99% band over the feature range.
  const Index n_bar = package.n_bar();
  for (Index i = 0; i < n_bar; ++i) {
    const GpErrorModel& model = package.gp_models[static_cast<std::size_t>(i)];
    const Index train_count = model.training_size();
    const Index online_count = report.indicators.cols();
    Matrix scatter(train_count + online_count, 3);
    for (Index r = 0; r < train_count; ++r) {
      scatter(r, 0) = model.features()(r);
      scatter(r, 1) = model.responses()(r);
      scatter(r, 2) = 0.0;
    }
    for (Index r = 0; r < online_count; ++r) {
      scatter(train_count + r, 0) = report.indicators(i, r);
      scatter(train_count + r, 1) = report.exact_coords(i, r);
      scatter(train_count + r, 2) = 1.0;
    }
    const fs::path scatter_path =
        run.out_dir / ("gp_scatter_" + std::to_string(i + 1) + ".csv");
    write_csv_matrix(scatter_path, scatter, {"rho", "delta", "held_out"});
    declare(scatter_path);

    double lo = model.features().minCoeff();
    double hi = model.features().maxCoeff();
    if (online_count > 0) {
      lo = std::min(lo, report.indicators.row(i).minCoeff());
      hi = std::max(hi, report.indicators.row(i).maxCoeff());
    }
    constexpr Index kCurvePoints = 200;
    Matrix curve(kCurvePoints, 4);
    for (Index r = 0; r < kCurvePoints; ++r) {
      const double rho =
          lo + (hi - lo) * static_cast<double>(r) / static_cast<double>(kCurvePoints - 1);
      const auto [band_lo, band_hi] = model.prediction_interval(rho, 0.99);
      curve(r, 0) = rho;
      curve(r, 1) = model.posterior(rho).mean;
      curve(r, 2) = band_lo;
      curve(r, 3) = band_hi;
    }
    const fs::path curve_path = run.out_dir / ("gp_curve_" + std::to_string(i + 1) + ".csv");
    write_csv_matrix(curve_path, curve, {"rho", "mean", "lo99", "hi99"});
    declare(curve_path);
  }

  // Long-format metric table.
  const fs::path metrics_path = run.out_dir / "metrics.csv";
  {
    std::ofstream out(metrics_path);
    if (!out) {
      throw ConfigError("cannot open '" + metrics_path.string() + "' for writing");
    }
    out << "metric,value\n";
    append_metric(out, "e_x", report.e_x);
    append_metric(out, "te_x_par", report.te_x_par);
    append_metric(out, "e_x_par", report.e_x_par);
    append_metric(out, "te_x_par_perp", report.te_x_par_perp);
    append_metric(out, "e_x_par_perp", report.e_x_par_perp);
    for (Index i = 0; i < n_bar; ++i) {
      const std::string suffix = "_" + std::to_string(i + 1);
      append_metric(out, "fvu" + suffix, report.fvu[static_cast<std::size_t>(i)]);
      for (int w = 0; w < 4; ++w) {
        char name[32];
        std::snprintf(name, sizeof(name), "nu_%.2f", kReportOmegas[w]);
        append_metric(out, name + suffix, report.nu(i, w));
      }
      append_metric(out, "ks" + suffix, report.ks[static_cast<std::size_t>(i)]);
    }
    for (std::size_t q = 0; q < report.qoi_labels.size(); ++q) {
      append_metric(out, "e_q_" + report.qoi_labels[q], report.e_q[q]);
      append_metric(out, "te_q_" + report.qoi_labels[q], report.te_q[q]);
    }
    append_metric(out, "points_used", static_cast<double>(report.points_used));
    append_metric(out, "points_excluded", static_cast<double>(report.points_excluded));
  }
  declare(metrics_path);

  write_summary(run.out_dir, config, "run", files);
  log("wrote " + std::to_string(files.size()) + " artifacts to " + run.out_dir.string());
}

void run_pareto(const ExperimentConfig& raw_config, const RunOverrides& overrides) {
  const ResolvedRun run = resolve(raw_config, overrides);
  const ExperimentConfig& config = run.config;
  if (!config.pareto) {
    throw ConfigError("the pareto command needs a 'pareto' section in the config");
  }
  const auto log = [&](const std::string& message) {
    if (!run.quiet) std::cout << message << std::endl;
  };

  fs::create_directories(run.out_dir);
  const std::unique_ptr<FomProblem> problem = make_problem(config.benchmark, config.grid_m);
  log("pareto study on " + config.benchmark + " (N = " + std::to_string(problem->dimension()) +
      ")");
  const ParetoStudy study = pareto_study(*problem, config.training, *config.pareto);

  const auto write_points = [&](const fs::path& path, bool front_only) {
    std::ofstream out(path);
    if (!out) {
      throw ConfigError("cannot open '" + path.string() + "' for writing");
    }
    out << "method,n,n_p,n_perp,error,rel_wall_time,mean_primal_iters,primal_ops,dual_ops,"
           "fom_ops,rel_ops,on_front\n";
    for (const ParetoPoint& p : study.points) {
      if (front_only && !p.on_front) continue;
      out << to_string(p.method) << ',' << p.n << ',';
      if (p.method != ParetoMethod::rom_only) out << p.n_p;  // empty cell for rom_only
      out << ',' << p.n_perp << ',' << format_double(p.error) << ','
          << format_double(p.rel_wall_time) << ',' << format_double(p.mean_primal_iters) << ','
          << format_double(p.primal_ops) << ',' << format_double(p.dual_ops) << ','
          << format_double(p.fom_ops) << ',' << format_double(p.rel_ops) << ','
          << (p.on_front ? 1 : 0) << '\n';
    }
  };

  std::vector<std::string> files;
  const fs::path points_path = run.out_dir / "pareto_points.csv";
  const fs::path front_path = run.out_dir / "pareto_front.csv";
  write_points(points_path, false);
  write_points(front_path, true);
  files.push_back(points_path.filename().string());
  files.push_back(front_path.filename().string());
  write_summary(run.out_dir, config, "pareto", files);
  log("wrote " + std::to_string(study.points.size()) + " configurations to " +
      run.out_dir.string());
}

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"Reduced-order-model error surrogates: training, prediction, and cost studies"};
  app.set_version_flag("--version", std::string(kVersionString));
  app.require_subcommand(1);

  std::string config_path;
  RunOverrides overrides;
  std::uint64_t seed_value = 0;

  const auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("config", config_path, "experiment config JSON")->required();
    cmd->add_option("--seed-override", seed_value,
                    "replace the five config seeds with S, S+1, ..., S+4");
    cmd->add_option("--out", [&overrides](const std::vector<std::string>& values) {
      overrides.output_dir = values.front();
      return true;
    }, "output directory (overrides the config)");
    cmd->add_flag("--quiet", overrides.quiet, "suppress progress output");
  };

  CLI::App* run_cmd = app.add_subcommand("run", "train a package and evaluate it");
  add_common(run_cmd);
  CLI::App* pareto_cmd = app.add_subcommand("pareto", "accuracy-versus-cost study");
  add_common(pareto_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfigError;
  }
  if (run_cmd->count("--seed-override") > 0 || pareto_cmd->count("--seed-override") > 0) {
    overrides.seed_override = seed_value;
  }

  try {
    const ExperimentConfig config = load_experiment_config(config_path);
    if (run_cmd->parsed()) {
      run_experiment(config, overrides);
    } else {
      run_pareto(config, overrides);
    }
    return kExitSuccess;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << std::endl;
    return kExitConfigError;
  } catch (const ContractViolation& e) {
    std::cerr << "config error: " << e.what() << std::endl;
    return kExitConfigError;
  } catch (const SolverError& e) {
    std::cerr << "numerical failure: " << e.what() << std::endl;
    return kExitNumericalError;
  } catch (const RankError& e) {
    std::cerr << "numerical failure: " << e.what() << std::endl;
    return kExitNumericalError;
  }
}

}  // namespace romes
