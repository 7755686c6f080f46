#include "romes/io.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

namespace romes {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

void write_csv_matrix(const fs::path& path, const Matrix& values,
                      const std::vector<std::string>& column_names) {
  if (!column_names.empty() && static_cast<Index>(column_names.size()) != values.cols()) {
    throw ContractViolation("write_csv_matrix: header length does not match columns");
  }
  std::ofstream out(path);
  if (!out) {
    throw ConfigError("write_csv_matrix: cannot open '" + path.string() + "' for writing");
  }
  for (Index c = 0; c < values.cols(); ++c) {
    if (c > 0) out << ',';
    out << (column_names.empty() ? "c" + std::to_string(c) : column_names[static_cast<std::size_t>(c)]);
  }
  out << '\n';
  for (Index r = 0; r < values.rows(); ++r) {
    for (Index c = 0; c < values.cols(); ++c) {
      if (c > 0) out << ',';
      out << format_double(values(r, c));
    }
    out << '\n';
  }
  if (!out.good()) {
    throw ConfigError("write_csv_matrix: write to '" + path.string() + "' failed");
  }
}

Matrix read_csv_matrix(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("read_csv_matrix: cannot open '" + path.string() + "'");
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw ConfigError("read_csv_matrix: '" + path.string() + "' is empty");
  }
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      std::size_t consumed = 0;
      double parsed = 0.0;
      try {
        parsed = std::stod(cell, &consumed);
      } catch (const std::exception&) {
        throw ConfigError("read_csv_matrix: malformed number '" + cell + "' in " + path.string());
      }
      if (consumed != cell.size()) {
        throw ConfigError("read_csv_matrix: malformed number '" + cell + "' in " + path.string());
      }
      row.push_back(parsed);
    }
    if (!rows.empty() && rows.front().size() != row.size()) {
      throw ConfigError("read_csv_matrix: ragged rows in " + path.string());
    }
    rows.push_back(std::move(row));
  }
  const auto n_rows = static_cast<Index>(rows.size());
  const auto n_cols = n_rows == 0 ? Index{0} : static_cast<Index>(rows.front().size());
  Matrix values(n_rows, n_cols);
  for (Index r = 0; r < n_rows; ++r) {
    for (Index c = 0; c < n_cols; ++c) {
      values(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    }
  }
  return values;
}

namespace {

json vector_to_json(const Vector& v) {
  json arr = json::array();
  for (Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

Vector vector_from_json(const json& arr) {
  Vector v(static_cast<Index>(arr.size()));
  for (Index i = 0; i < v.size(); ++i) v(i) = arr.at(static_cast<std::size_t>(i)).get<double>();
  return v;
}

json gp_to_json(const GpErrorModel& model) {
  json j;
  j["noise_variance"] = model.hyper().noise_variance;
  j["signal_variance"] = model.hyper().signal_variance;
  j["length_scale"] = model.hyper().length_scale;
  j["beta"] = {model.beta()(0), model.beta()(1)};
  j["features"] = vector_to_json(model.features());
  j["responses"] = vector_to_json(model.responses());
  return j;
}

GpErrorModel gp_from_json(const json& j) {
  GpHyperparameters hyper;
  hyper.noise_variance = j.at("noise_variance").get<double>();
  hyper.signal_variance = j.at("signal_variance").get<double>();
  hyper.length_scale = j.at("length_scale").get<double>();
  Eigen::Vector2d beta;
  beta(0) = j.at("beta").at(0).get<double>();
  beta(1) = j.at("beta").at(1).get<double>();
  return GpErrorModel::from_parts(hyper, beta, vector_from_json(j.at("features")),
                                  vector_from_json(j.at("responses")));
}

void write_json_file(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) {
    throw ConfigError("cannot open '" + path.string() + "' for writing");
  }
  out << j.dump(2) << '\n';
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open '" + path.string() + "'");
  }
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("invalid JSON in '" + path.string() + "': " + e.what());
  }
}

}  // namespace

void save_package(const OfflinePackage& package, const fs::path& dir) {
  fs::create_directories(dir);
  const TrainingConfig& cfg = package.config;

  json manifest;
  manifest["schema_version"] = 1;
  manifest["full_dim"] = package.subspaces.full_dim();
  manifest["n"] = cfg.n;
  manifest["n_perp"] = cfg.n_perp;
  manifest["n_p"] = cfg.n_p;
  manifest["dual_mode"] = to_string(cfg.dual_mode);
  manifest["projection"] = to_string(cfg.projection);
  manifest["metric"] = to_string(cfg.metric);
  manifest["loss"] = {{"kind", to_string(cfg.loss.kind)}, {"omega", cfg.loss.omega}};
  manifest["cv_folds"] = cfg.cv_folds;
  manifest["grid_points_per_dim"] = cfg.grid_points_per_dim;
  manifest["sizes"] = {{"pod", cfg.sizes.pod},
                       {"dual", cfg.sizes.dual},
                       {"romes", cfg.sizes.romes},
                       {"online", cfg.sizes.online}};
  manifest["seeds"] = {{"pod", cfg.seeds.pod},
                       {"dual", cfg.seeds.dual},
                       {"romes", cfg.seeds.romes},
                       {"online", cfg.seeds.online},
                       {"cv", cfg.seeds.cv}};
  manifest["fom_tolerance"] = cfg.fom_tolerance;
  manifest["rom_tolerance"] = cfg.rom_tolerance;
  manifest["max_iterations"] = cfg.max_iterations;
  manifest["variance_weighting"] = to_string(cfg.variance_weighting);
  manifest["qoi_samples"] = cfg.qoi_samples;
  manifest["gp_model_count"] = package.gp_models.size();
  manifest["dual_basis_count"] = package.dual_basis.bases.size();
  manifest["full_dual_basis"] = cfg.n_p >= package.subspaces.full_dim();

  write_csv_matrix(dir / "phi.csv", package.subspaces.phi);
  if (package.subspaces.n_perp() > 0) {
    write_csv_matrix(dir / "phi_perp.csv", package.subspaces.phi_perp);
  }
  write_csv_matrix(dir / "reference_state.csv", package.subspaces.reference_state);
  write_csv_matrix(dir / "singular_values.csv", package.subspaces.singular_values);
  write_csv_matrix(dir / "pod_params.csv", package.provenance.pod_params);
  write_csv_matrix(dir / "dual_params.csv", package.provenance.dual_params);
  write_csv_matrix(dir / "romes_params.csv", package.provenance.romes_params);
  for (std::size_t b = 0; b < package.dual_basis.bases.size(); ++b) {
    write_csv_matrix(dir / ("dual_basis_" + std::to_string(b) + ".csv"),
                     package.dual_basis.bases[b]);
  }
  for (std::size_t g = 0; g < package.gp_models.size(); ++g) {
    write_json_file(dir / ("gp_model_" + std::to_string(g) + ".json"),
                    gp_to_json(package.gp_models[g]));
  }
  write_json_file(dir / "manifest.json", manifest);
}

OfflinePackage load_package(const FomProblem& problem, const fs::path& dir) {
  const json manifest = read_json_file(dir / "manifest.json");
  try {
    OfflinePackage package;
    TrainingConfig& cfg = package.config;
    cfg.n = manifest.at("n").get<Index>();
    cfg.n_perp = manifest.at("n_perp").get<Index>();
    cfg.n_p = manifest.at("n_p").get<Index>();
    cfg.dual_mode = dual_mode_from_string(manifest.at("dual_mode").get<std::string>());
    cfg.projection = projection_from_string(manifest.at("projection").get<std::string>());
    cfg.metric = metric_kind_from_string(manifest.at("metric").get<std::string>());
    cfg.loss.kind = loss_kind_from_string(manifest.at("loss").at("kind").get<std::string>());
    cfg.loss.omega = manifest.at("loss").at("omega").get<double>();
    cfg.cv_folds = manifest.at("cv_folds").get<int>();
    cfg.grid_points_per_dim = manifest.at("grid_points_per_dim").get<int>();
    cfg.sizes.pod = manifest.at("sizes").at("pod").get<Index>();
    cfg.sizes.dual = manifest.at("sizes").at("dual").get<Index>();
    cfg.sizes.romes = manifest.at("sizes").at("romes").get<Index>();
    cfg.sizes.online = manifest.at("sizes").at("online").get<Index>();
    cfg.seeds.pod = manifest.at("seeds").at("pod").get<std::uint64_t>();
    cfg.seeds.dual = manifest.at("seeds").at("dual").get<std::uint64_t>();
    cfg.seeds.romes = manifest.at("seeds").at("romes").get<std::uint64_t>();
    cfg.seeds.online = manifest.at("seeds").at("online").get<std::uint64_t>();
    cfg.seeds.cv = manifest.at("seeds").at("cv").get<std::uint64_t>();
    cfg.fom_tolerance = manifest.at("fom_tolerance").get<double>();
    cfg.rom_tolerance = manifest.at("rom_tolerance").get<double>();
    cfg.max_iterations = manifest.at("max_iterations").get<int>();
    cfg.variance_weighting =
        variance_weighting_from_string(manifest.at("variance_weighting").get<std::string>());
    cfg.qoi_samples = manifest.at("qoi_samples").get<Index>();

    const auto full_dim = manifest.at("full_dim").get<Index>();
    if (full_dim != problem.dimension()) {
      throw ConfigError("load_package: package dimension " + std::to_string(full_dim) +
                        " does not match the problem dimension " +
                        std::to_string(problem.dimension()));
    }

    SubspaceSet& sub = package.subspaces;
    sub.phi = read_csv_matrix(dir / "phi.csv");
    sub.phi_perp = cfg.n_perp > 0 ? read_csv_matrix(dir / "phi_perp.csv")
                                  : Matrix(sub.phi.rows(), 0);
    sub.reference_state = read_csv_matrix(dir / "reference_state.csv").col(0);
    sub.singular_values = read_csv_matrix(dir / "singular_values.csv").col(0);
    sub.metric = build_metric(problem, cfg.metric);
    sub.validate();

    package.provenance.pod_params = read_csv_matrix(dir / "pod_params.csv");
    package.provenance.dual_params = read_csv_matrix(dir / "dual_params.csv");
    package.provenance.romes_params = read_csv_matrix(dir / "romes_params.csv");
    package.provenance.seeds = cfg.seeds;

    package.dual_basis.mode = cfg.dual_mode;
    const auto basis_count = manifest.at("dual_basis_count").get<std::size_t>();
    for (std::size_t b = 0; b < basis_count; ++b) {
      package.dual_basis.bases.push_back(
          read_csv_matrix(dir / ("dual_basis_" + std::to_string(b) + ".csv")));
    }
    const auto gp_count = manifest.at("gp_model_count").get<std::size_t>();
    for (std::size_t g = 0; g < gp_count; ++g) {
      package.gp_models.push_back(
          gp_from_json(read_json_file(dir / ("gp_model_" + std::to_string(g) + ".json"))));
    }
    if (package.gp_models.size() != static_cast<std::size_t>(package.subspaces.n_bar())) {
      throw ConfigError("load_package: GP model count does not match n + n_perp");
    }
    return package;
  } catch (const json::exception& e) {
    throw ConfigError("load_package: malformed manifest in '" + dir.string() + "': " + e.what());
  }
}

}  // namespace romes
