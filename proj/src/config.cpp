#include "frkd/config.hpp"

#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace frkd {

void require_keys(const nlohmann::json& j, const std::string& context,
                  const std::vector<std::string>& allowed) {
  if (!j.is_object()) {
    throw std::invalid_argument(context + ": expected a JSON object");
  }
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const auto& k : allowed) {
      if (it.key() == k) {
        ok = true;
        break;
      }
    }
    if (!ok) throw std::invalid_argument(context + ": unknown key '" + it.key() + "'");
  }
}

nlohmann::json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  return j;
}

GridConfig parse_grid(const nlohmann::json& j, const std::string& context) {
  require_keys(j, context, {"nx", "ny", "xmin", "xmax", "ymin", "ymax"});
  GridConfig g;
  g.nx = j.at("nx").get<int>();
  g.ny = j.at("ny").get<int>();
  g.xmin = j.value("xmin", 0.0);
  g.xmax = j.value("xmax", 1.0);
  g.ymin = j.value("ymin", 0.0);
  g.ymax = j.value("ymax", 1.0);
  return g;
}

BasisConfig parse_basis(const nlohmann::json& j, const std::string& context) {
  require_keys(j, context, {"n_res", "coarsest_per_axis", "quad4"});
  BasisConfig b;
  b.n_res = j.value("n_res", 2);
  b.coarsest_per_axis = j.value("coarsest_per_axis", 3);
  b.quad4 = j.value("quad4", false);
  return b;
}

CovarianceSpec parse_covariance(const nlohmann::json& j, const std::string& context) {
  require_keys(j, context, {"sigma2", "range"});
  return {j.at("sigma2").get<double>(), j.at("range").get<double>()};
}

EmOptions parse_em(const nlohmann::json& j, const std::string& context) {
  require_keys(j, context, {"tol", "max_iter"});
  EmOptions em;
  em.tol = j.value("tol", 1e-6);
  em.max_iter = j.value("max_iter", 200);
  return em;
}

SpacingScope parse_scope(const std::string& s, const std::string& context) {
  if (s == "within-batch") return SpacingScope::WithinBatch;
  if (s == "global") return SpacingScope::Global;
  throw std::invalid_argument(context +
                              ": scope must be 'within-batch' or 'global', got '" + s + "'");
}

FactorialConfig parse_factorial(const nlohmann::json& j) {
  require_keys(j, "factorial config",
               {"grid", "covariance", "n_stations", "n_clusters", "station_file",
                "snr_z", "snr_q", "proxy_nx", "proxy_ny", "n_x_levels", "snr_x_levels",
                "min_spacing", "scope", "realizations", "noise_reps", "seed", "basis",
                "em"});
  FactorialConfig c;
  if (j.contains("grid")) c.grid = parse_grid(j["grid"], "factorial.grid");
  if (j.contains("covariance")) c.cov = parse_covariance(j["covariance"], "factorial.covariance");
  c.n_stations = j.value("n_stations", c.n_stations);
  c.n_clusters = j.value("n_clusters", c.n_clusters);
  if (j.contains("station_file")) c.station_file = j["station_file"].get<std::string>();
  c.snr_z = j.value("snr_z", c.snr_z);
  c.snr_q = j.value("snr_q", c.snr_q);
  c.proxy_nx = j.value("proxy_nx", c.proxy_nx);
  c.proxy_ny = j.value("proxy_ny", c.proxy_ny);
  if (j.contains("n_x_levels")) c.n_x_levels = j["n_x_levels"].get<std::vector<int>>();
  if (j.contains("snr_x_levels")) {
    c.snr_x_levels = j["snr_x_levels"].get<std::vector<double>>();
  }
  c.min_spacing = j.value("min_spacing", c.min_spacing);
  if (j.contains("scope")) c.scope = parse_scope(j["scope"].get<std::string>(), "factorial");
  c.realizations = j.value("realizations", c.realizations);
  c.noise_reps = j.value("noise_reps", c.noise_reps);
  c.seed = j.value("seed", c.seed);
  if (j.contains("basis")) c.basis = parse_basis(j["basis"], "factorial.basis");
  if (j.contains("em")) c.em = parse_em(j["em"], "factorial.em");
  if (c.n_x_levels.empty() || c.snr_x_levels.empty() || c.realizations < 1 ||
      c.noise_reps < 1) {
    throw std::invalid_argument("factorial config: levels and counts must be non-empty/positive");
  }
  return c;
}

BatchStudyConfig parse_batch_study(const nlohmann::json& j) {
  require_keys(j, "batch-study config",
               {"grid", "covariance", "n_stations", "n_clusters", "station_file",
                "snr_z", "snr_q", "proxy_nx", "proxy_ny", "n_x_levels", "batch_levels",
                "snr_x", "min_spacing", "scope", "realizations", "seed", "basis", "em"});
  BatchStudyConfig c;
  if (j.contains("grid")) c.grid = parse_grid(j["grid"], "batch-study.grid");
  if (j.contains("covariance")) {
    c.cov = parse_covariance(j["covariance"], "batch-study.covariance");
  }
  c.n_stations = j.value("n_stations", c.n_stations);
  c.n_clusters = j.value("n_clusters", c.n_clusters);
  if (j.contains("station_file")) c.station_file = j["station_file"].get<std::string>();
  c.snr_z = j.value("snr_z", c.snr_z);
  c.snr_q = j.value("snr_q", c.snr_q);
  c.proxy_nx = j.value("proxy_nx", c.proxy_nx);
  c.proxy_ny = j.value("proxy_ny", c.proxy_ny);
  if (j.contains("n_x_levels")) c.n_x_levels = j["n_x_levels"].get<std::vector<int>>();
  if (j.contains("batch_levels")) c.batch_levels = j["batch_levels"].get<std::vector<int>>();
  c.snr_x = j.value("snr_x", c.snr_x);
  c.min_spacing = j.value("min_spacing", c.min_spacing);
  if (j.contains("scope")) c.scope = parse_scope(j["scope"].get<std::string>(), "batch-study");
  c.realizations = j.value("realizations", c.realizations);
  c.seed = j.value("seed", c.seed);
  if (j.contains("basis")) c.basis = parse_basis(j["basis"], "batch-study.basis");
  if (j.contains("em")) c.em = parse_em(j["em"], "batch-study.em");
  if (c.n_x_levels.empty() || c.batch_levels.empty() || c.realizations < 1) {
    throw std::invalid_argument("batch-study config: levels must be non-empty");
  }
  return c;
}

OsseConfig parse_osse(const nlohmann::json& j) {
  require_keys(j, "osse config",
               {"grid", "covariance", "coarse_nx", "coarse_ny", "mask_file",
                "station_file", "proxy_point_file", "block_sd_file", "risk1_file",
                "risk2_file", "snr_z", "snr_x", "n_sensors", "batch_size",
                "min_spacing", "lambda", "scope", "noise_draws", "seed", "basis", "em"});
  OsseConfig c;
  c.grid = parse_grid(j.at("grid"), "osse.grid");
  if (j.contains("covariance")) c.cov = parse_covariance(j["covariance"], "osse.covariance");
  c.coarse_nx = j.at("coarse_nx").get<int>();
  c.coarse_ny = j.at("coarse_ny").get<int>();
  c.mask_file = j.at("mask_file").get<std::string>();
  c.station_file = j.at("station_file").get<std::string>();
  c.proxy_point_file = j.at("proxy_point_file").get<std::string>();
  c.block_sd_file = j.at("block_sd_file").get<std::string>();
  c.risk1_file = j.at("risk1_file").get<std::string>();
  c.risk2_file = j.at("risk2_file").get<std::string>();
  c.snr_z = j.value("snr_z", c.snr_z);
  c.snr_x = j.value("snr_x", c.snr_x);
  c.n_sensors = j.value("n_sensors", c.n_sensors);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.min_spacing = j.value("min_spacing", c.min_spacing);
  c.lambda = j.value("lambda", c.lambda);
  if (j.contains("scope")) c.scope = parse_scope(j["scope"].get<std::string>(), "osse");
  c.noise_draws = j.value("noise_draws", c.noise_draws);
  c.seed = j.value("seed", c.seed);
  if (j.contains("basis")) c.basis = parse_basis(j["basis"], "osse.basis");
  if (j.contains("em")) c.em = parse_em(j["em"], "osse.em");
  return c;
}

}  // namespace frkd
