#include "romes/config.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>

namespace romes {

using nlohmann::json;

namespace {

const json& require(const json& j, const std::string& field, const std::string& scope) {
  if (!j.contains(field)) {
    throw ConfigError("missing required field '" + (scope.empty() ? field : scope + "." + field) +
                      "'");
  }
  return j.at(field);
}

template <typename T>
T require_as(const json& j, const std::string& field, const std::string& scope = "") {
  try {
    return require(j, field, scope).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("field '" + (scope.empty() ? field : scope + "." + field) +
                      "' has the wrong type");
  }
}

template <typename T>
T optional_as(const json& j, const std::string& field, T fallback) {
  if (!j.contains(field)) return fallback;
  try {
    return j.at(field).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("field '" + field + "' has the wrong type");
  }
}

ExperimentConfig parse(const json& j) {
  const int schema = require_as<int>(j, "schema_version");
  if (schema != kConfigSchemaVersion) {
    throw ConfigError("unsupported schema_version " + std::to_string(schema) + " (expected " +
                      std::to_string(kConfigSchemaVersion) + ")");
  }

  ExperimentConfig config;
  config.benchmark = require_as<std::string>(j, "benchmark");
  if (config.benchmark != "linear_diffusion" && config.benchmark != "nonlinear_reaction") {
    throw ConfigError("field 'benchmark' must be linear_diffusion or nonlinear_reaction");
  }
  config.grid_m = require_as<Index>(j, "grid_m");
  if (config.grid_m < 3) {
    throw ConfigError("field 'grid_m' must be at least 3");
  }
  config.output_dir = require_as<std::string>(j, "output_dir");

  TrainingConfig& t = config.training;
  t.metric = metric_kind_from_string(require_as<std::string>(j, "metric"));
  t.n = require_as<Index>(j, "n");
  t.n_perp = require_as<Index>(j, "n_perp");
  t.n_p = require_as<Index>(j, "n_p");
  t.dual_mode = dual_mode_from_string(require_as<std::string>(j, "dual_mode"));
  t.projection = projection_from_string(require_as<std::string>(j, "projection"));
  if (t.n < 1 || t.n_perp < 0 || t.n_p < 1) {
    throw ConfigError("fields 'n'/'n_perp'/'n_p' must satisfy n >= 1, n_perp >= 0, n_p >= 1");
  }

  const json& loss = require(j, "loss", "");
  t.loss.kind = loss_kind_from_string(require_as<std::string>(loss, "kind", "loss"));
  t.loss.omega = optional_as<double>(loss, "omega", 0.9);
  if (t.loss.kind == LossKind::interval && !(t.loss.omega > 0.0 && t.loss.omega < 1.0)) {
    throw ConfigError("field 'loss.omega' must lie in (0, 1) for the interval loss");
  }

  t.cv_folds = require_as<int>(j, "cv_folds");
  if (t.cv_folds < 2) {
    throw ConfigError("field 'cv_folds' must be at least 2");
  }
  t.grid_points_per_dim = optional_as<int>(j, "grid_points_per_dim", 12);
  if (t.grid_points_per_dim < 1) {
    throw ConfigError("field 'grid_points_per_dim' must be positive");
  }

  const json& sizes = require(j, "set_sizes", "");
  t.sizes.pod = require_as<Index>(sizes, "pod", "set_sizes");
  t.sizes.dual = require_as<Index>(sizes, "dual", "set_sizes");
  t.sizes.romes = require_as<Index>(sizes, "romes", "set_sizes");
  t.sizes.online = require_as<Index>(sizes, "online", "set_sizes");
  if (t.sizes.pod < 2 || t.sizes.dual < 1 || t.sizes.romes < 3 || t.sizes.online < 1) {
    throw ConfigError("field 'set_sizes' entries are too small");
  }

  const json& seeds = require(j, "seeds", "");
  t.seeds.pod = require_as<std::uint64_t>(seeds, "pod", "seeds");
  t.seeds.dual = require_as<std::uint64_t>(seeds, "dual", "seeds");
  t.seeds.romes = require_as<std::uint64_t>(seeds, "romes", "seeds");
  t.seeds.online = require_as<std::uint64_t>(seeds, "online", "seeds");
  t.seeds.cv = require_as<std::uint64_t>(seeds, "cv", "seeds");

  if (j.contains("solver")) {
    const json& solver = j.at("solver");
    t.fom_tolerance = optional_as<double>(solver, "fom_tolerance", t.fom_tolerance);
    t.rom_tolerance = optional_as<double>(solver, "rom_tolerance", t.rom_tolerance);
    t.max_iterations = optional_as<int>(solver, "max_iterations", t.max_iterations);
    if (t.fom_tolerance <= 0.0 || t.rom_tolerance <= 0.0 || t.max_iterations < 1) {
      throw ConfigError("field 'solver' entries must be positive");
    }
  }
  t.variance_weighting = variance_weighting_from_string(
      optional_as<std::string>(j, "variance_weighting", "squared"));
  t.qoi_samples = optional_as<Index>(j, "qoi_samples", 100);
  if (t.qoi_samples < 1) {
    throw ConfigError("field 'qoi_samples' must be positive");
  }

  if (j.contains("pareto")) {
    const json& p = j.at("pareto");
    ParetoGrid grid;
    for (const auto& v : require(p, "n_values", "pareto")) grid.n_values.push_back(v.get<Index>());
    for (const auto& v : require(p, "n_p_offsets", "pareto")) {
      grid.n_p_offsets.push_back(v.get<Index>());
    }
    if (p.contains("n_perp_values")) {
      for (const auto& v : p.at("n_perp_values")) grid.n_perp_values.push_back(v.get<Index>());
    }
    for (const auto& v : require(p, "methods", "pareto")) {
      grid.methods.push_back(pareto_method_from_string(v.get<std::string>()));
    }
    if (grid.n_values.empty() || grid.methods.empty()) {
      throw ConfigError("field 'pareto' needs nonempty n_values and methods");
    }
    const bool wants_full =
        std::find(grid.methods.begin(), grid.methods.end(), ParetoMethod::romes_full) !=
        grid.methods.end();
    const bool wants_duals =
        wants_full || std::find(grid.methods.begin(), grid.methods.end(),
                                ParetoMethod::romes_inplane) != grid.methods.end();
    if (wants_duals && grid.n_p_offsets.empty()) {
      throw ConfigError("field 'pareto.n_p_offsets' must be nonempty for romes methods");
    }
    if (wants_full && grid.n_perp_values.empty()) {
      throw ConfigError("field 'pareto.n_perp_values' must be nonempty for romes_full");
    }
    config.pareto = std::move(grid);
  }
  return config;
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  return parse(j);
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file '" + path.string() + "'");
  }
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_experiment_config(text);
}

}  // namespace romes
