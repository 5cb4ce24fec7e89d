#include "frkd/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "frkd/csv.hpp"

namespace frkd {

std::vector<Location> station_layout_clustered(const Domain& domain, int n_stations,
                                               int n_clusters, Rng rng) {
  if (n_clusters < 1 || n_stations < 1 || n_stations % n_clusters != 0) {
    throw std::invalid_argument(
        "station_layout_clustered: n_stations must be a positive multiple of n_clusters");
  }
  const int per_cluster = n_stations / n_clusters;
  const double margin_x = 0.1 * domain.width();
  const double margin_y = 0.1 * domain.height();
  const double scatter_x = 0.03 * domain.width();
  const double scatter_y = 0.03 * domain.height();
  std::vector<Location> out;
  out.reserve(n_stations);
  for (int c = 0; c < n_clusters; ++c) {
    const double cx = domain.xmin + margin_x + rng.next_double() * (domain.width() - 2 * margin_x);
    const double cy = domain.ymin + margin_y + rng.next_double() * (domain.height() - 2 * margin_y);
    for (int k = 0; k < per_cluster; ++k) {
      const double x = std::clamp(cx + scatter_x * rng.next_gaussian(), domain.xmin, domain.xmax);
      const double y = std::clamp(cy + scatter_y * rng.next_gaussian(), domain.ymin, domain.ymax);
      out.push_back({x, y});
    }
  }
  return out;
}

void write_results_csv(const std::string& path, const ResultTable& table) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(table.size());
  for (const auto& r : table) {
    rows.push_back({std::to_string(r.realization), std::to_string(r.noise_rep),
                    r.strategy, std::to_string(r.n_x), format_number(r.snr_x),
                    std::to_string(r.b), r.metric, format_number(r.value), r.status});
  }
  write_csv(path,
            {"realization", "noise_rep", "strategy", "n_x", "snr_x", "b", "metric",
             "value", "status"},
            rows);
}

ResultTable read_results_csv(const std::string& path) {
  const CsvTable t = read_csv(path);
  ResultTable table;
  table.reserve(t.rows.size());
  for (const auto& row : t.rows) {
    ResultRecord r;
    r.realization = std::stoi(row[0]);
    r.noise_rep = std::stoi(row[1]);
    r.strategy = row[2];
    r.n_x = std::stoi(row[3]);
    r.snr_x = std::stod(row[4]);
    r.b = std::stoi(row[5]);
    r.metric = row[6];
    r.value = std::stod(row[7]);
    r.status = row.size() > 8 ? row[8] : "ok";
    table.push_back(std::move(r));
  }
  return table;
}

namespace {

struct SimSetup {
  BauGrid grid;
  BlockPartition blocks;
  BasisSet basis;
  Eigen::MatrixXd s;
  TrendSpec trend;
  std::vector<Location> stations;
  std::vector<int> station_baus;   // per station
  std::vector<int> candidates;     // all BAUs except station BAUs
  Eigen::LLT<Eigen::MatrixXd> cov_chol;
};

SimSetup make_sim_setup(const GridConfig& grid_cfg, const CovarianceSpec& cov,
                        const BasisConfig& basis_cfg, int n_stations, int n_clusters,
                        const std::optional<std::string>& station_file, Rng master) {
  SimSetup s{grid_cfg.grid(),
             {},
             BasisSet::multires(grid_cfg.domain(), basis_cfg.n_res,
                                basis_cfg.coarsest_per_axis),
             {},
             TrendSpec::constant(0),
             {},
             {},
             {},
             {}};
  s.s = s.basis.evaluate_matrix(s.grid, basis_cfg.quad4);
  s.trend = TrendSpec::constant(s.grid.size());
  s.stations = station_file.has_value()
                   ? load_points(*station_file)
                   : station_layout_clustered(s.grid.domain(), n_stations, n_clusters,
                                              master.stream({kStreamStationLayout}));
  std::set<int> station_set;
  for (const auto& loc : s.stations) {
    const int b = s.grid.index_of(loc);
    s.station_baus.push_back(b);
    station_set.insert(b);
  }
  for (int i = 0; i < s.grid.size(); ++i) {
    if (station_set.find(i) == station_set.end()) s.candidates.push_back(i);
  }
  s.cov_chol = chol_with_jitter(
      cov_matrix(std::span<const double>(s.grid.centroid_xs()),
                 std::span<const double>(s.grid.centroid_ys()), cov),
      cov.sigma2);
  return s;
}

// Z and Q for one process realization, then the initial fit.
struct RealizationData {
  FieldRealization truth;
  ObservationSet obs0;
  FitResult fit0;
};

RealizationData make_realization(const SimSetup& setup, const CovarianceSpec& cov,
                                 double snr_z, double snr_q, Rng master, int m1,
                                 const EmOptions& em) {
  RealizationData d;
  d.truth = simulate_with_chol(setup.grid, setup.cov_chol,
                               master.stream({kStreamProcess, static_cast<std::uint64_t>(m1)}).seed());

  const auto n_st = static_cast<Eigen::Index>(setup.stations.size());
  Eigen::VectorXd z(n_st);
  Rng zrng = master.stream({kStreamNoiseZ, static_cast<std::uint64_t>(m1)});
  const double z_sd = std::sqrt(cov.sigma2 / snr_z);
  for (Eigen::Index j = 0; j < n_st; ++j) {
    z[j] = d.truth.values[setup.station_baus[j]] + z_sd * zrng.next_gaussian();
  }

  const std::vector<double> block_avg = areal_average(d.truth.values, setup.blocks);
  Eigen::VectorXd q(setup.blocks.n_blocks());
  Rng qrng = master.stream({kStreamNoiseQ, static_cast<std::uint64_t>(m1)});
  const double q_sd = std::sqrt(cov.sigma2 / snr_q);
  for (int j = 0; j < setup.blocks.n_blocks(); ++j) {
    q[j] = block_avg[j] + q_sd * qrng.next_gaussian();
  }

  d.obs0.add(make_point_block(ObsKind::Station, setup.grid, setup.stations, z,
                              Eigen::VectorXd::Constant(n_st, cov.sigma2 / snr_z)));
  d.obs0.add(make_areal_block(setup.blocks, setup.grid.size(), q,
                              Eigen::VectorXd::Constant(setup.blocks.n_blocks(),
                                                        cov.sigma2 / snr_q)));
  d.fit0 = em_fit(d.obs0, setup.basis, setup.s, setup.trend, std::nullopt, em);
  return d;
}

std::vector<int> validation_indices(int n_bau, const std::vector<int>& station_baus,
                                    const std::vector<int>& sites,
                                    const std::vector<int>* support = nullptr) {
  std::set<int> excluded(station_baus.begin(), station_baus.end());
  excluded.insert(sites.begin(), sites.end());
  std::vector<int> out;
  if (support != nullptr) {
    for (int i : *support) {
      if (excluded.find(i) == excluded.end()) out.push_back(i);
    }
  } else {
    for (int i = 0; i < n_bau; ++i) {
      if (excluded.find(i) == excluded.end()) out.push_back(i);
    }
  }
  return out;
}

ValidationSet make_validation(const std::vector<int>& indices,
                              const FieldRealization& truth, const Prediction& pred) {
  ValidationSet v;
  v.indices = indices;
  const auto n = static_cast<Eigen::Index>(indices.size());
  v.truth.resize(n);
  v.pred_mean.resize(n);
  v.pred_sd.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const int i = indices[k];
    v.truth[k] = truth.values[i];
    v.pred_mean[k] = pred.mean[i];
    v.pred_sd[k] = std::sqrt(std::max(0.0, pred.variance[i]));
  }
  return v;
}

void append_metric_records(ResultTable& table, int m1, int m2, const std::string& strategy,
                           int n_x, double snr_x, int b, const MetricRecord& rec) {
  const std::pair<const char*, double> metrics[] = {
      {"mape", rec.mape}, {"rmspe", rec.rmspe}, {"mpe", rec.mpe}, {"crps", rec.crps}};
  for (const auto& [name, value] : metrics) {
    table.push_back({m1, m2, strategy, n_x, snr_x, b, name, value, "ok"});
  }
}

void append_failed_records(ResultTable& table, int m1, int m2, const std::string& strategy,
                           int n_x, double snr_x, int b, const std::string& why) {
  for (const char* name : {"mape", "rmspe", "mpe", "crps"}) {
    table.push_back({m1, m2, strategy, n_x, snr_x, b, name,
                     std::numeric_limits<double>::quiet_NaN(), why});
  }
}

double quantile_type7(std::vector<double> sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("quantile of empty set");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - lo) * (sorted[hi] - sorted[lo]);
}

}  // namespace

ResultTable run_factorial(const FactorialConfig& cfg) {
  Rng master(cfg.seed);
  SimSetup setup = make_sim_setup(cfg.grid, cfg.cov, cfg.basis, cfg.n_stations,
                                  cfg.n_clusters, cfg.station_file, master);
  setup.blocks = nest_blocks(setup.grid, cfg.proxy_nx, cfg.proxy_ny);

  ResultTable table;
  for (int m1 = 0; m1 < cfg.realizations; ++m1) {
    const RealizationData real =
        make_realization(setup, cfg.cov, cfg.snr_z, cfg.snr_q, master, m1, cfg.em);

    for (std::size_t i_nx = 0; i_nx < cfg.n_x_levels.size(); ++i_nx) {
      const int n_x = cfg.n_x_levels[i_nx];
      for (std::size_t i_snr = 0; i_snr < cfg.snr_x_levels.size(); ++i_snr) {
        const double snr_x = cfg.snr_x_levels[i_snr];
        const double sensor_var = cfg.cov.sigma2 / snr_x;

        for (int strat = 0; strat < 2; ++strat) {
          const std::string strategy = strat == 0 ? "adaptive" : "random";
          std::vector<int> sites;
          try {
            if (strat == 0) {
              DesignConfig dc;
              dc.n_sensors = n_x;
              dc.batch_size = 1;  // the factorial runs singleton batches
              dc.min_spacing = cfg.min_spacing;
              dc.scope = cfg.scope;
              dc.candidates = setup.candidates;
              const DesignTrace trace = run_adaptive_design(
                  real.obs0, setup.basis, setup.s, setup.trend, dc, UtilityConfig{},
                  sensor_var, real.truth, setup.grid,
                  master.stream({kStreamDesign, static_cast<std::uint64_t>(m1), i_nx, i_snr}),
                  cfg.em, nullptr, &real.fit0);
              if (static_cast<int>(trace.sites.size()) != n_x) {
                throw std::runtime_error("adaptive design placed " +
                                         std::to_string(trace.sites.size()) + " of " +
                                         std::to_string(n_x) + " sensors");
              }
              sites = trace.sites;
            } else {
              sites = run_random_design(
                  setup.candidates, n_x,
                  master.stream({kStreamRandomDesign, static_cast<std::uint64_t>(m1), i_nx, i_snr}));
            }
          } catch (const std::exception& e) {
            for (int m2 = 0; m2 < cfg.noise_reps; ++m2) {
              append_failed_records(table, m1, m2, strategy, n_x, snr_x, 1, e.what());
            }
            continue;
          }

          const std::vector<int> valid =
              validation_indices(setup.grid.size(), setup.station_baus, sites);
          std::vector<Location> site_locs;
          for (int sidx : sites) site_locs.push_back(setup.grid.centroid(sidx));

          for (int m2 = 0; m2 < cfg.noise_reps; ++m2) {
            try {
              Rng xr = master.stream({kStreamNoiseX, static_cast<std::uint64_t>(m1), i_nx,
                                      i_snr, static_cast<std::uint64_t>(strat),
                                      static_cast<std::uint64_t>(m2)});
              Eigen::VectorXd xv(static_cast<Eigen::Index>(sites.size()));
              const double sd = std::sqrt(sensor_var);
              for (Eigen::Index k = 0; k < xv.size(); ++k) {
                xv[k] = real.truth.values[sites[k]] + sd * xr.next_gaussian();
              }
              const ObservationSet obs = real.obs0.augmented(make_point_block(
                  ObsKind::Sensor, setup.grid, site_locs, xv,
                  Eigen::VectorXd::Constant(xv.size(), sensor_var)));
              const Prediction pred =
                  condition(obs, setup.basis, setup.s, setup.trend, real.fit0.params);
              const MetricRecord rec = score(make_validation(valid, real.truth, pred));
              append_metric_records(table, m1, m2, strategy, n_x, snr_x, 1, rec);
            } catch (const std::exception& e) {
              append_failed_records(table, m1, m2, strategy, n_x, snr_x, 1, e.what());
            }
          }
        }
      }
    }
  }
  return table;
}

std::vector<DiffSummaryRow> summarize_differences(const ResultTable& table) {
  using CellKey = std::tuple<int, double, std::string>;          // n_x, snr_x, metric
  using PairKey = std::pair<int, int>;                           // realization, rep
  std::map<CellKey, std::map<PairKey, std::pair<std::optional<double>, std::optional<double>>>>
      cells;

  for (const auto& r : table) {
    auto& slot = cells[{r.n_x, r.snr_x, r.metric}][{r.realization, r.noise_rep}];
    const bool ok = r.status == "ok" && std::isfinite(r.value);
    if (r.strategy == "adaptive") {
      slot.first = ok ? std::optional<double>(r.value) : std::nullopt;
    } else if (r.strategy == "random") {
      slot.second = ok ? std::optional<double>(r.value) : std::nullopt;
    } else {
      throw std::invalid_argument("summarize_differences: unknown strategy " + r.strategy);
    }
  }

  std::vector<DiffSummaryRow> rows;
  for (const auto& [key, pairs] : cells) {
    std::vector<double> diffs;
    std::vector<std::string> missing;
    for (const auto& [pk, values] : pairs) {
      const bool have_a = values.first.has_value();
      const bool have_r = values.second.has_value();
      if (have_a && have_r) {
        diffs.push_back(*values.second - *values.first);
      } else if (!have_a && !have_r) {
        continue;  // both failed; excluded
      } else {
        missing.push_back("(" + std::to_string(pk.first) + "," + std::to_string(pk.second) +
                          ")");
      }
    }
    if (!missing.empty()) {
      std::string what = "summarize_differences: unpaired cells for n_x=" +
                         std::to_string(std::get<0>(key)) + " metric=" + std::get<2>(key) + ":";
      for (const auto& m : missing) what += " " + m;
      throw std::invalid_argument(what);
    }
    if (diffs.empty()) continue;
    std::sort(diffs.begin(), diffs.end());
    DiffSummaryRow row;
    row.n_x = std::get<0>(key);
    row.snr_x = std::get<1>(key);
    row.metric = std::get<2>(key);
    row.n_pairs = static_cast<int>(diffs.size());
    double s = 0.0;
    for (double d : diffs) s += d;
    row.mean_diff = s / static_cast<double>(diffs.size());
    row.q25 = quantile_type7(diffs, 0.25);
    row.q75 = quantile_type7(diffs, 0.75);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<BatchStudyRow> run_batch_study(const BatchStudyConfig& cfg) {
  Rng master(cfg.seed);
  SimSetup setup = make_sim_setup(cfg.grid, cfg.cov, cfg.basis, cfg.n_stations,
                                  cfg.n_clusters, cfg.station_file, master);
  setup.blocks = nest_blocks(setup.grid, cfg.proxy_nx, cfg.proxy_ny);

  std::map<std::pair<int, int>, std::pair<double, double>> accum;  // (n_x,b) -> sums
  for (int m1 = 0; m1 < cfg.realizations; ++m1) {
    const RealizationData real =
        make_realization(setup, cfg.cov, cfg.snr_z, cfg.snr_q, master, m1, cfg.em);
    for (int n_x : cfg.n_x_levels) {
      for (int b : cfg.batch_levels) {
        if (b > n_x) continue;
        DesignConfig dc;
        dc.n_sensors = n_x;
        dc.batch_size = b;
        dc.min_spacing = cfg.min_spacing;
        dc.scope = cfg.scope;
        dc.candidates = setup.candidates;
        const DesignTrace trace = run_adaptive_design(
            real.obs0, setup.basis, setup.s, setup.trend, dc, UtilityConfig{},
            cfg.cov.sigma2 / cfg.snr_x, real.truth, setup.grid,
            master.stream({kStreamDesign, static_cast<std::uint64_t>(m1),
                           static_cast<std::uint64_t>(n_x), static_cast<std::uint64_t>(b)}),
            cfg.em, nullptr, &real.fit0);
        const std::vector<int> valid =
            validation_indices(setup.grid.size(), setup.station_baus, trace.sites);
        const double r =
            rmspe(make_validation(valid, real.truth, trace.final_pred));
        auto& acc = accum[{n_x, b}];
        acc.first += trace.final_pred.variance.mean();
        acc.second += r;
      }
    }
  }

  std::vector<BatchStudyRow> rows;
  for (const auto& [key, sums] : accum) {
    rows.push_back({key.first, key.second, sums.first / cfg.realizations,
                    sums.second / cfg.realizations});
  }
  return rows;
}

SummaryStats summary_stats(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("summary_stats: empty input");
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  SummaryStats s;
  s.count = static_cast<int>(values.size());
  s.min = sorted.front();
  s.max = sorted.back();
  s.q1 = quantile_type7(sorted, 0.25);
  s.median = quantile_type7(sorted, 0.5);
  s.q3 = quantile_type7(sorted, 0.75);
  double acc = 0.0;
  for (double v : values) acc += v;
  s.mean = acc / s.count;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.sd = s.count > 1 ? std::sqrt(ss / (s.count - 1)) : 0.0;
  return s;
}

namespace {

nlohmann::json stats_json(const SummaryStats& s) {
  return {{"min", s.min},   {"q1", s.q1}, {"median", s.median}, {"mean", s.mean},
          {"q3", s.q3},     {"max", s.max}, {"sd", s.sd},       {"count", s.count}};
}

nlohmann::json metric_json(const MetricRecord& m) {
  return {{"mape", m.mape}, {"rmspe", m.rmspe}, {"mpe", m.mpe}, {"crps", m.crps}};
}

std::vector<double> gather(const std::vector<double>& field, const std::vector<int>& idx) {
  std::vector<double> out;
  out.reserve(idx.size());
  for (int i : idx) out.push_back(field[i]);
  return out;
}

}  // namespace

OsseReport run_osse(const OsseConfig& cfg, const std::string& out_dir) {
  Rng master(cfg.seed);
  const BauGrid grid = cfg.grid.grid();
  const int n_bau = grid.size();

  const std::vector<double> mask_raw = load_bau_field(cfg.mask_file, n_bau);
  std::vector<std::uint8_t> mask(n_bau, 0);
  std::vector<int> active;
  for (int i = 0; i < n_bau; ++i) {
    if (mask_raw[i] != 0.0) {
      mask[i] = 1;
      active.push_back(i);
    }
  }
  if (active.empty()) throw std::runtime_error(cfg.mask_file + ": mask selects no BAUs");

  const BlockPartition blocks = nest_blocks(grid, cfg.coarse_nx, cfg.coarse_ny, mask);
  const auto [proxy_locs, proxy_vals] = load_point_values(cfg.proxy_point_file);
  Eigen::VectorXd proxy_data(static_cast<Eigen::Index>(proxy_vals.size()));
  for (std::size_t i = 0; i < proxy_vals.size(); ++i) {
    proxy_data[static_cast<Eigen::Index>(i)] = proxy_vals[i];
  }

  const FieldRealization truth =
      simulate_conditional(grid, proxy_locs, proxy_data, cfg.cov,
                           master.stream({kStreamProcess}).seed(), &active);

  // Station data.
  const std::vector<Location> stations = load_points(cfg.station_file);
  std::vector<int> station_baus;
  for (const auto& loc : stations) station_baus.push_back(grid.index_of(loc));
  Eigen::VectorXd z(static_cast<Eigen::Index>(stations.size()));
  {
    Rng zr = master.stream({kStreamNoiseZ});
    const double sd = std::sqrt(cfg.cov.sigma2 / cfg.snr_z);
    for (Eigen::Index j = 0; j < z.size(); ++j) {
      z[j] = truth.values[station_baus[j]] + sd * zr.next_gaussian();
    }
  }

  // Proxy data: block averages plus per-block noise, SDs from file.
  const std::vector<double> block_sds =
      load_block_values(cfg.block_sd_file, blocks.n_blocks(), "sd");
  const std::vector<double> block_avg = areal_average(truth.values, blocks);
  Eigen::VectorXd q(blocks.n_blocks());
  Eigen::VectorXd q_var(blocks.n_blocks());
  {
    Rng qr = master.stream({kStreamNoiseQ});
    for (int j = 0; j < blocks.n_blocks(); ++j) {
      if (!(block_sds[j] > 0.0)) {
        throw std::runtime_error(cfg.block_sd_file + ": non-positive sd for block " +
                                 std::to_string(j));
      }
      q[j] = block_avg[j] + block_sds[j] * qr.next_gaussian();
      q_var[j] = block_sds[j] * block_sds[j];
    }
  }

  ObservationSet obs0;
  obs0.add(make_point_block(ObsKind::Station, grid, stations, z,
                            Eigen::VectorXd::Constant(z.size(), cfg.cov.sigma2 / cfg.snr_z)));
  obs0.add(make_areal_block(blocks, n_bau, q, q_var));

  const BasisSet basis = BasisSet::multires(grid.domain(), cfg.basis.n_res,
                                            cfg.basis.coarsest_per_axis);
  const Eigen::MatrixXd s_matrix = basis.evaluate_matrix(grid, cfg.basis.quad4);
  const TrendSpec trend = TrendSpec::constant(n_bau);
  const FitResult fit0 = em_fit(obs0, basis, s_matrix, trend, std::nullopt, cfg.em);

  const std::vector<double> r1 = load_bau_field(cfg.risk1_file, n_bau);
  const std::vector<double> r2 = load_bau_field(cfg.risk2_file, n_bau);
  const RiskField risk = make_risk_field(grid, r1, r2, cfg.lambda);

  std::set<int> station_set(station_baus.begin(), station_baus.end());
  std::vector<int> candidates;
  for (int i : active) {
    if (station_set.find(i) == station_set.end()) candidates.push_back(i);
  }

  DesignConfig dc;
  dc.n_sensors = cfg.n_sensors;
  dc.batch_size = cfg.batch_size;
  dc.min_spacing = cfg.min_spacing;
  dc.scope = cfg.scope;
  dc.candidates = candidates;
  UtilityConfig uc;
  uc.lambda = risk.lambda;
  uc.risk = risk.values;

  const DesignTrace trace = run_adaptive_design(
      obs0, basis, s_matrix, trend, dc, uc, cfg.cov.sigma2 / cfg.snr_x, truth, grid,
      master.stream({kStreamDesign}), cfg.em, &active, &fit0);

  OsseReport report;
  report.process = summary_stats(gather(truth.values, active));
  report.stations = summary_stats(std::vector<double>(z.data(), z.data() + z.size()));
  report.proxy = summary_stats(std::vector<double>(q.data(), q.data() + q.size()));
  report.sites = trace.sites;

  report.sites_all_risk = !trace.sites.empty();
  for (int sidx : trace.sites) {
    if (!(risk.values[sidx] > 0.0)) report.sites_all_risk = false;
  }
  report.min_site_spacing = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < trace.sites.size(); ++a) {
    for (std::size_t b = a + 1; b < trace.sites.size(); ++b) {
      report.min_site_spacing =
          std::min(report.min_site_spacing,
                   euclidean_distance(grid.centroid(trace.sites[a]),
                                      grid.centroid(trace.sites[b])));
    }
  }

  {
    double pre = 0.0, post = 0.0;
    for (int sidx : trace.sites) {
      pre += std::sqrt(std::max(0.0, fit0.pred.variance[sidx]));
      post += std::sqrt(std::max(0.0, trace.final_pred.variance[sidx]));
    }
    report.pre_mean_sd_sensors = pre / trace.sites.size();
    report.post_mean_sd_sensors = post / trace.sites.size();
  }

  const std::vector<int> valid =
      validation_indices(n_bau, station_baus, trace.sites, &active);
  report.no_x = score(make_validation(valid, truth, fit0.pred));

  std::vector<Location> site_locs;
  for (int sidx : trace.sites) site_locs.push_back(grid.centroid(sidx));
  const double sensor_var = cfg.cov.sigma2 / cfg.snr_x;
  for (int d = 0; d < cfg.noise_draws; ++d) {
    Rng xr = master.stream({kStreamNoiseX, static_cast<std::uint64_t>(d)});
    Eigen::VectorXd xv(static_cast<Eigen::Index>(trace.sites.size()));
    const double sd = std::sqrt(sensor_var);
    for (Eigen::Index k = 0; k < xv.size(); ++k) {
      xv[k] = truth.values[trace.sites[k]] + sd * xr.next_gaussian();
    }
    const ObservationSet obs = obs0.augmented(
        make_point_block(ObsKind::Sensor, grid, site_locs, xv,
                         Eigen::VectorXd::Constant(xv.size(), sensor_var)));
    const Prediction pred = condition(obs, basis, s_matrix, trend, fit0.params);
    report.with_x.push_back(score(make_validation(valid, truth, pred)));
  }

  if (!out_dir.empty()) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    fs::create_directories(out_dir + "/surfaces");

    // Truth and prediction surfaces over the active BAUs.
    {
      std::vector<std::vector<std::string>> rows;
      for (int i : active) {
        rows.push_back({std::to_string(i), format_number(truth.values[i])});
      }
      write_csv(out_dir + "/surfaces/truth.csv", {"bau_index", "value"}, rows);
    }
    const auto write_pred = [&](const std::string& name, const Prediction& pred) {
      std::vector<int> idx;
      std::vector<double> mean, sd_v;
      for (int i : active) {
        idx.push_back(i);
        mean.push_back(pred.mean[i]);
        sd_v.push_back(std::sqrt(std::max(0.0, pred.variance[i])));
      }
      write_surface(out_dir + "/surfaces/" + name, idx, mean, sd_v);
    };
    write_pred("fit_zq.csv", fit0.pred);
    write_pred("fit_all.csv", trace.final_pred);
    {
      std::vector<std::vector<std::string>> rows;
      for (int i : active) {
        rows.push_back({std::to_string(i),
                        format_number(trace.final_pred.mean[i] - truth.values[i])});
      }
      write_csv(out_dir + "/surfaces/error.csv", {"bau_index", "value"}, rows);
    }

    // Selected sites.
    {
      std::vector<std::vector<std::string>> rows;
      for (const auto& st : trace.steps) {
        for (int sidx : st.selected) {
          const Location loc = grid.centroid(sidx);
          rows.push_back({format_number(loc.x), format_number(loc.y),
                          std::to_string(sidx), std::to_string(st.step)});
        }
      }
      write_csv(out_dir + "/sites.csv", {"x", "y", "bau_index", "step"}, rows);
    }

    // Design trace.
    {
      nlohmann::json dj;
      dj["seed"] = cfg.seed;
      dj["n_sensors"] = cfg.n_sensors;
      dj["batch_size"] = cfg.batch_size;
      dj["min_spacing"] = cfg.min_spacing;
      dj["lambda"] = cfg.lambda;
      dj["scope"] = cfg.scope == SpacingScope::Global ? "global" : "within-batch";
      dj["complete"] = trace.complete;
      dj["sites"] = trace.sites;
      dj["steps"] = nlohmann::json::array();
      for (const auto& st : trace.steps) {
        dj["steps"].push_back({{"step", st.step},
                               {"selected", st.selected},
                               {"mean_variance", st.mean_variance}});
      }
      dj["basis"] = basis.to_json();
      std::ofstream out(out_dir + "/design.json");
      out << dj.dump(2) << '\n';
    }

    // Per-draw metric table.
    {
      std::vector<std::vector<std::string>> rows;
      for (std::size_t d = 0; d < report.with_x.size(); ++d) {
        const auto& m = report.with_x[d];
        const std::pair<const char*, double> metrics[] = {
            {"mape", m.mape}, {"rmspe", m.rmspe}, {"mpe", m.mpe}, {"crps", m.crps}};
        for (const auto& [name, value] : metrics) {
          rows.push_back({std::to_string(d), name, format_number(value), "ok"});
        }
      }
      write_csv(out_dir + "/results.csv", {"draw", "metric", "value", "status"}, rows);
    }

    // Headline summary.
    {
      nlohmann::json sj;
      sj["summary_table"] = {{"process", stats_json(report.process)},
                             {"stations", stats_json(report.stations)},
                             {"proxy", stats_json(report.proxy)}};
      sj["sites_all_risk"] = report.sites_all_risk;
      sj["min_site_spacing"] = report.min_site_spacing;
      sj["pre_mean_sd_sensors"] = report.pre_mean_sd_sensors;
      sj["post_mean_sd_sensors"] = report.post_mean_sd_sensors;
      sj["metrics_without_x"] = metric_json(report.no_x);
      const auto quart = [&](auto getter) {
        std::vector<double> v;
        for (const auto& m : report.with_x) v.push_back(getter(m));
        return stats_json(summary_stats(v));
      };
      sj["metrics_with_x"] = {
          {"mape", quart([](const MetricRecord& m) { return m.mape; })},
          {"rmspe", quart([](const MetricRecord& m) { return m.rmspe; })},
          {"mpe", quart([](const MetricRecord& m) { return m.mpe; })},
          {"crps", quart([](const MetricRecord& m) { return m.crps; })}};
      std::ofstream out(out_dir + "/summary.json");
      out << sj.dump(2) << '\n';
    }
  }
  return report;
}

}  // namespace frkd
