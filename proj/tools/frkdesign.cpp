// Command-line front end: each subcommand reads a JSON config and writes its
// artifacts under --out. Unknown config keys are rejected.

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include <nlohmann/json.hpp>

#include "frkd/config.hpp"
#include "frkd/csv.hpp"
#include "frkd/harness.hpp"
#include "frkd/kernels.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct ModelInputs {
  frkd::BauGrid grid;
  double sigma2_y = 1.0;
  frkd::BasisSet basis;
  Eigen::MatrixXd s_matrix;
  frkd::TrendSpec trend;
  frkd::ObservationSet obs;
  std::vector<int> station_baus;
  std::vector<int> active;  // masked support (all BAUs when no mask)
  frkd::EmOptions em;
  std::optional<frkd::BlockPartition> blocks;
};

// Shared assembly for `fit` and `design`: grid, basis, mask, and the three
// observation sections.
ModelInputs load_model_inputs(const json& cfg, const std::string& context) {
  const frkd::GridConfig gc = frkd::parse_grid(cfg.at("grid"), context + ".grid");
  frkd::BasisConfig bc;
  if (cfg.contains("basis")) bc = frkd::parse_basis(cfg["basis"], context + ".basis");

  ModelInputs in{gc.grid(),
                 cfg.value("sigma2_y", 1.0),
                 frkd::BasisSet::multires(gc.domain(), bc.n_res, bc.coarsest_per_axis),
                 {},
                 frkd::TrendSpec::constant(0),
                 {},
                 {},
                 {},
                 {},
                 {}};
  in.s_matrix = in.basis.evaluate_matrix(in.grid, bc.quad4);
  in.trend = frkd::TrendSpec::constant(in.grid.size());
  if (cfg.contains("em")) in.em = frkd::parse_em(cfg["em"], context + ".em");

  std::vector<std::uint8_t> mask(in.grid.size(), 1);
  if (cfg.contains("mask_file")) {
    const auto raw = frkd::load_bau_field(cfg["mask_file"].get<std::string>(), in.grid.size());
    for (int i = 0; i < in.grid.size(); ++i) mask[i] = raw[i] != 0.0 ? 1 : 0;
  }
  for (int i = 0; i < in.grid.size(); ++i) {
    if (mask[i]) in.active.push_back(i);
  }

  if (cfg.contains("stations")) {
    const json& sj = cfg["stations"];
    frkd::require_keys(sj, context + ".stations", {"file", "snr", "error_var"});
    auto [locs, vals] = frkd::load_point_values(sj.at("file").get<std::string>());
    double var = 0.0;
    if (sj.contains("snr")) {
      var = in.sigma2_y / sj["snr"].get<double>();
    } else {
      var = sj.at("error_var").get<double>();
    }
    Eigen::VectorXd v = Eigen::Map<Eigen::VectorXd>(vals.data(), vals.size());
    in.obs.add(frkd::make_point_block(frkd::ObsKind::Station, in.grid, locs, v,
                                      Eigen::VectorXd::Constant(v.size(), var)));
    for (const auto& loc : locs) in.station_baus.push_back(in.grid.index_of(loc));
  }

  if (cfg.contains("proxy")) {
    const json& pj = cfg["proxy"];
    frkd::require_keys(pj, context + ".proxy", {"nx", "ny", "file", "snr", "sd_file"});
    frkd::BlockPartition blocks =
        frkd::nest_blocks(in.grid, pj.at("nx").get<int>(), pj.at("ny").get<int>(), mask);
    const auto vals = frkd::load_block_values(pj.at("file").get<std::string>(),
                                              blocks.n_blocks(), "value");
    Eigen::VectorXd v(blocks.n_blocks());
    for (int j = 0; j < blocks.n_blocks(); ++j) v[j] = vals[j];
    Eigen::VectorXd var(blocks.n_blocks());
    if (pj.contains("sd_file")) {
      const auto sds = frkd::load_block_values(pj["sd_file"].get<std::string>(),
                                               blocks.n_blocks(), "sd");
      for (int j = 0; j < blocks.n_blocks(); ++j) var[j] = sds[j] * sds[j];
    } else {
      var.setConstant(in.sigma2_y / pj.at("snr").get<double>());
    }
    in.obs.add(frkd::make_areal_block(blocks, in.grid.size(), v, var));
    in.blocks = std::move(blocks);
  }

  if (cfg.contains("sensors")) {
    const json& xj = cfg["sensors"];
    frkd::require_keys(xj, context + ".sensors", {"file", "snr", "error_var"});
    auto [locs, vals] = frkd::load_point_values(xj.at("file").get<std::string>());
    double var = 0.0;
    if (xj.contains("snr")) {
      var = in.sigma2_y / xj["snr"].get<double>();
    } else {
      var = xj.at("error_var").get<double>();
    }
    Eigen::VectorXd v = Eigen::Map<Eigen::VectorXd>(vals.data(), vals.size());
    in.obs.add(frkd::make_point_block(frkd::ObsKind::Sensor, in.grid, locs, v,
                                      Eigen::VectorXd::Constant(v.size(), var)));
  }
  return in;
}

json fit_json(const frkd::FitResult& fit, const frkd::BasisSet& basis) {
  json fj;
  fj["beta"] = std::vector<double>(fit.params.beta.data(),
                                   fit.params.beta.data() + fit.params.beta.size());
  fj["k_variance"] = fit.params.k.variance;
  fj["k_length"] = fit.params.k.length;
  fj["sigma2_xi"] = fit.params.sigma2_xi;
  fj["loglik"] = fit.loglik;
  fj["iterations"] = fit.iterations;
  fj["converged"] = fit.converged;
  fj["loglik_trace"] = fit.loglik_trace;
  fj["init"] = {{"k_variance", fit.init.k.variance},
                {"k_length", fit.init.k.length},
                {"sigma2_xi", fit.init.sigma2_xi}};
  fj["basis"] = basis.to_json();
  return fj;
}

void write_pred_surface(const std::string& path, const frkd::Prediction& pred,
                        const std::vector<int>& active) {
  std::vector<int> idx;
  std::vector<double> mean, sd;
  for (int i : active) {
    idx.push_back(i);
    mean.push_back(pred.mean[i]);
    sd.push_back(std::sqrt(std::max(0.0, pred.variance[i])));
  }
  frkd::write_surface(path, idx, mean, sd);
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir) {
  const json cfg = frkd::load_json_file(config_path);
  frkd::require_keys(cfg, "simulate config",
                     {"grid", "covariance", "seed", "mask_file", "conditional", "blocks"});
  const frkd::GridConfig gc = frkd::parse_grid(cfg.at("grid"), "simulate.grid");
  const frkd::BauGrid grid = gc.grid();
  const frkd::CovarianceSpec cov =
      frkd::parse_covariance(cfg.at("covariance"), "simulate.covariance");
  const std::uint64_t seed = cfg.value("seed", 1);

  std::vector<int> active;
  std::vector<std::uint8_t> mask(grid.size(), 1);
  if (cfg.contains("mask_file")) {
    const auto raw = frkd::load_bau_field(cfg["mask_file"].get<std::string>(), grid.size());
    for (int i = 0; i < grid.size(); ++i) mask[i] = raw[i] != 0.0 ? 1 : 0;
  }
  for (int i = 0; i < grid.size(); ++i) {
    if (mask[i]) active.push_back(i);
  }
  const bool masked = static_cast<int>(active.size()) != grid.size();

  frkd::FieldRealization field;
  if (cfg.contains("conditional")) {
    frkd::require_keys(cfg["conditional"], "simulate.conditional", {"data_file"});
    auto [locs, vals] = frkd::load_point_values(
        cfg["conditional"].at("data_file").get<std::string>());
    Eigen::VectorXd v = Eigen::Map<Eigen::VectorXd>(vals.data(), vals.size());
    field = frkd::simulate_conditional(grid, locs, v, cov, seed,
                                       masked ? &active : nullptr);
  } else {
    field = frkd::simulate_unconditional(grid, cov, seed, masked ? &active : nullptr);
  }

  fs::create_directories(out_dir);
  {
    std::vector<std::vector<std::string>> rows;
    for (int i : active) {
      rows.push_back({std::to_string(i), frkd::format_number(field.values[i])});
    }
    frkd::write_csv(out_dir + "/truth.csv", {"bau_index", "value"}, rows);
  }
  if (cfg.contains("blocks")) {
    frkd::require_keys(cfg["blocks"], "simulate.blocks", {"nx", "ny"});
    const frkd::BlockPartition blocks = frkd::nest_blocks(
        grid, cfg["blocks"].at("nx").get<int>(), cfg["blocks"].at("ny").get<int>(), mask);
    frkd::write_block_values(out_dir + "/blocks.csv",
                             frkd::areal_average(field.values, blocks), "value");
  }
  std::cout << "simulate: wrote " << active.size() << " BAU values to " << out_dir
            << "/truth.csv\n";
  return 0;
}

int cmd_fit(const std::string& config_path, const std::string& out_dir) {
  const json cfg = frkd::load_json_file(config_path);
  frkd::require_keys(cfg, "fit config",
                     {"grid", "sigma2_y", "basis", "mask_file", "stations", "proxy",
                      "sensors", "em"});
  ModelInputs in = load_model_inputs(cfg, "fit");
  const frkd::FitResult fit =
      frkd::em_fit(in.obs, in.basis, in.s_matrix, in.trend, std::nullopt, in.em);

  fs::create_directories(out_dir + "/surfaces");
  {
    std::ofstream out(out_dir + "/fit.json");
    out << fit_json(fit, in.basis).dump(2) << '\n';
  }
  write_pred_surface(out_dir + "/surfaces/fit.csv", fit.pred, in.active);
  std::cout << "fit: loglik " << fit.loglik << " after " << fit.iterations
            << " iterations (" << (fit.converged ? "converged" : "max_iter") << ")\n";
  return 0;
}

int cmd_design(const std::string& config_path, const std::string& out_dir) {
  const json cfg = frkd::load_json_file(config_path);
  frkd::require_keys(cfg, "design config",
                     {"grid", "sigma2_y", "basis", "mask_file", "stations", "proxy",
                      "sensors", "em", "truth_file", "design", "utility", "snr_x",
                      "seed"});
  ModelInputs in = load_model_inputs(cfg, "design");

  frkd::FieldRealization truth;
  truth.values = frkd::load_bau_field(cfg.at("truth_file").get<std::string>(),
                                      in.grid.size());

  const json& dj = cfg.at("design");
  frkd::require_keys(dj, "design.design",
                     {"n_sensors", "batch_size", "min_spacing", "scope",
                      "refit_each_step"});
  frkd::DesignConfig dc;
  dc.n_sensors = dj.at("n_sensors").get<int>();
  dc.batch_size = dj.value("batch_size", 1);
  dc.min_spacing = dj.value("min_spacing", 0.0);
  if (dj.contains("scope")) {
    dc.scope = frkd::parse_scope(dj["scope"].get<std::string>(), "design.design");
  }
  dc.refit_each_step = dj.value("refit_each_step", false);
  std::set<int> stations(in.station_baus.begin(), in.station_baus.end());
  for (int i : in.active) {
    if (stations.find(i) == stations.end()) dc.candidates.push_back(i);
  }

  frkd::UtilityConfig uc;
  if (cfg.contains("utility")) {
    const json& uj = cfg["utility"];
    frkd::require_keys(uj, "design.utility", {"lambda", "risk1_file", "risk2_file"});
    const auto r1 = frkd::load_bau_field(uj.at("risk1_file").get<std::string>(),
                                         in.grid.size());
    const auto r2 = frkd::load_bau_field(uj.at("risk2_file").get<std::string>(),
                                         in.grid.size());
    const frkd::RiskField risk =
        frkd::make_risk_field(in.grid, r1, r2, uj.value("lambda", 1.0));
    uc.lambda = risk.lambda;
    uc.risk = risk.values;
  }

  const double snr_x = cfg.at("snr_x").get<double>();
  const std::uint64_t seed = cfg.value("seed", 1);
  const frkd::DesignTrace trace = frkd::run_adaptive_design(
      in.obs, in.basis, in.s_matrix, in.trend, dc, uc, in.sigma2_y / snr_x, truth,
      in.grid, frkd::Rng(seed), in.em, &in.active);

  fs::create_directories(out_dir + "/surfaces");
  write_pred_surface(out_dir + "/surfaces/before.csv", trace.initial_fit.pred, in.active);
  write_pred_surface(out_dir + "/surfaces/after.csv", trace.final_pred, in.active);
  {
    std::vector<std::vector<std::string>> rows;
    for (const auto& st : trace.steps) {
      for (int sidx : st.selected) {
        const frkd::Location loc = in.grid.centroid(sidx);
        rows.push_back({frkd::format_number(loc.x), frkd::format_number(loc.y),
                        std::to_string(sidx), std::to_string(st.step)});
      }
    }
    frkd::write_csv(out_dir + "/sites.csv", {"x", "y", "bau_index", "step"}, rows);
  }
  {
    json tj;
    tj["seed"] = seed;
    tj["complete"] = trace.complete;
    tj["sites"] = trace.sites;
    tj["steps"] = json::array();
    for (const auto& st : trace.steps) {
      tj["steps"].push_back({{"step", st.step},
                             {"selected", st.selected},
                             {"mean_variance", st.mean_variance}});
    }
    tj["fit"] = fit_json(trace.initial_fit, in.basis);
    std::ofstream out(out_dir + "/design.json");
    out << tj.dump(2) << '\n';
  }
  std::cout << "design: selected " << trace.sites.size() << " sites ("
            << (trace.complete ? "complete" : "short: spacing exhausted candidates")
            << ")\n";
  return 0;
}

int cmd_evaluate(const std::string& config_path, const std::string& out_dir) {
  const json cfg = frkd::load_json_file(config_path);
  frkd::require_keys(cfg, "evaluate config", {"truth_file", "surface_file", "exclude_file"});
  const frkd::CsvTable surface = frkd::read_csv(cfg.at("surface_file").get<std::string>());
  const int ci = surface.column("bau_index");
  const int cm = surface.column("mean");
  const int cs = surface.column("sd");
  if (ci < 0 || cm < 0 || cs < 0) {
    throw std::runtime_error("surface file must have bau_index,mean,sd columns");
  }

  std::vector<int> indices;
  std::vector<double> mean, sd;
  int max_index = -1;
  for (const auto& row : surface.rows) {
    indices.push_back(std::stoi(row[ci]));
    mean.push_back(std::stod(row[cm]));
    sd.push_back(std::stod(row[cs]));
    max_index = std::max(max_index, indices.back());
  }
  const auto truth =
      frkd::load_bau_field(cfg.at("truth_file").get<std::string>(), max_index + 1);
  std::set<int> excluded;
  if (cfg.contains("exclude_file")) {
    const auto ex =
        frkd::load_bau_field(cfg["exclude_file"].get<std::string>(), max_index + 1);
    for (int i = 0; i <= max_index; ++i) {
      if (ex[i] != 0.0) excluded.insert(i);
    }
  }

  frkd::ValidationSet v;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (excluded.count(indices[k]) != 0) continue;
    v.indices.push_back(indices[k]);
  }
  v.truth.resize(static_cast<Eigen::Index>(v.indices.size()));
  v.pred_mean.resize(v.truth.size());
  v.pred_sd.resize(v.truth.size());
  Eigen::Index at = 0;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (excluded.count(indices[k]) != 0) continue;
    v.truth[at] = truth[indices[k]];
    v.pred_mean[at] = mean[k];
    v.pred_sd[at] = sd[k];
    ++at;
  }
  const frkd::MetricRecord rec = frkd::score(v);

  fs::create_directories(out_dir);
  json mj = {{"mape", rec.mape},
             {"mae", rec.mape},
             {"rmspe", rec.rmspe},
             {"mpe", rec.mpe},
             {"crps", rec.crps},
             {"n_validation", v.indices.size()}};
  std::ofstream out(out_dir + "/metrics.json");
  out << mj.dump(2) << '\n';
  std::cout << "evaluate: " << mj.dump() << '\n';
  return 0;
}

int cmd_factorial(const std::string& config_path, const std::string& out_dir) {
  const frkd::FactorialConfig cfg =
      frkd::parse_factorial(frkd::load_json_file(config_path));
  const frkd::ResultTable table = frkd::run_factorial(cfg);
  fs::create_directories(out_dir);
  frkd::write_results_csv(out_dir + "/results.csv", table);

  int excluded = 0;
  for (const auto& r : table) {
    if (r.status != "ok") ++excluded;
  }
  const auto rows = frkd::summarize_differences(table);
  json sj;
  sj["excluded_records"] = excluded;
  sj["differences"] = json::array();
  for (const auto& row : rows) {
    sj["differences"].push_back({{"n_x", row.n_x},
                                 {"snr_x", row.snr_x},
                                 {"metric", row.metric},
                                 {"mean_diff", row.mean_diff},
                                 {"q25", row.q25},
                                 {"q75", row.q75},
                                 {"n_pairs", row.n_pairs}});
  }
  std::ofstream out(out_dir + "/summary.json");
  out << sj.dump(2) << '\n';
  std::cout << "factorial: " << table.size() << " records, " << excluded
            << " excluded; summary in " << out_dir << "/summary.json\n";
  return 0;
}

int cmd_batch_study(const std::string& config_path, const std::string& out_dir) {
  const frkd::BatchStudyConfig cfg =
      frkd::parse_batch_study(frkd::load_json_file(config_path));
  const auto rows = frkd::run_batch_study(cfg);
  fs::create_directories(out_dir);
  std::vector<std::vector<std::string>> csv_rows;
  for (const auto& r : rows) {
    csv_rows.push_back({std::to_string(r.n_x), std::to_string(r.b),
                        frkd::format_number(r.mean_pred_variance),
                        frkd::format_number(r.rmspe)});
  }
  frkd::write_csv(out_dir + "/results.csv",
                  {"n_x", "b", "mean_pred_variance", "rmspe"}, csv_rows);
  std::cout << "batch-study: " << rows.size() << " (n_x, b) rows in " << out_dir
            << "/results.csv\n";
  return 0;
}

int cmd_osse(const std::string& config_path, const std::string& out_dir) {
  const frkd::OsseConfig cfg = frkd::parse_osse(frkd::load_json_file(config_path));
  const frkd::OsseReport report = frkd::run_osse(cfg, out_dir);
  std::cout << "osse: " << report.sites.size() << " sensors placed, min spacing "
            << report.min_site_spacing << ", pre/post sensor-BAU SD "
            << report.pre_mean_sd_sensors << " -> " << report.post_mean_sd_sensors
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heterogeneous spatial data fusion and adaptive sensor placement"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out";
  const auto add = [&](const std::string& name, const std::string& desc) {
    CLI::App* sub = app.add_subcommand(name, desc);
    sub->add_option("--config", config_path, "JSON config file")->required();
    sub->add_option("--out", out_dir, "output directory");
    return sub;
  };

  CLI::App* simulate = add("simulate", "draw a (conditional) Gaussian field over the BAU grid");
  CLI::App* fit = add("fit", "fit the spatial random effects model to observation files");
  CLI::App* design = add("design", "run the adaptive sensor-placement loop");
  CLI::App* evaluate = add("evaluate", "score a prediction surface against a truth field");
  CLI::App* factorial = add("factorial", "multi-factor sampling-strategy experiment");
  CLI::App* batch = add("batch-study", "batch-size effect study");
  CLI::App* osse = add("osse", "masked-domain observing-system simulation experiment");

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) return cmd_simulate(config_path, out_dir);
    if (fit->parsed()) return cmd_fit(config_path, out_dir);
    if (design->parsed()) return cmd_design(config_path, out_dir);
    if (evaluate->parsed()) return cmd_evaluate(config_path, out_dir);
    if (factorial->parsed()) return cmd_factorial(config_path, out_dir);
    if (batch->parsed()) return cmd_batch_study(config_path, out_dir);
    if (osse->parsed()) return cmd_osse(config_path, out_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
