#pragma once

#include <string>
#include <vector>

#include "frkd/config.hpp"
#include "frkd/design.hpp"
#include "frkd/metrics.hpp"

namespace frkd {

/// Stream-splitting roles. Every random draw in an experiment comes from
/// master.stream({role, index...}), so changing one factor (say the number
/// of noise repetitions) never perturbs draws of another role.
enum StreamRole : std::uint64_t {
  kStreamProcess = 1,
  kStreamStationLayout = 2,
  kStreamNoiseZ = 3,
  kStreamNoiseQ = 4,
  kStreamDesign = 5,
  kStreamRandomDesign = 6,
  kStreamNoiseX = 7,
};

/// Station coordinates in clusters: cluster centers uniform over the domain
/// interior (10% margin), members scattered N(0, (0.03 * extent)^2) around
/// their center and clipped to the domain.
std::vector<Location> station_layout_clustered(const Domain& domain, int n_stations,
                                               int n_clusters, Rng rng);

struct ResultRecord {
  int realization = 0;
  int noise_rep = 0;
  std::string strategy;  // "adaptive" or "random"
  int n_x = 0;
  double snr_x = 0.0;
  int b = 1;
  std::string metric;  // mape | rmspe | mpe | crps
  double value = 0.0;
  std::string status = "ok";
};

using ResultTable = std::vector<ResultRecord>;

void write_results_csv(const std::string& path, const ResultTable& table);
ResultTable read_results_csv(const std::string& path);

/// Full factorial over (realization, n_X, SNR_X, strategy, noise rep) with
/// b = 1 and risk weight 0; emits one record per metric per cell. Output
/// order and values are fully determined by the config.
ResultTable run_factorial(const FactorialConfig& cfg);

struct DiffSummaryRow {
  int n_x = 0;
  double snr_x = 0.0;
  std::string metric;
  double mean_diff = 0.0;  // mean of (random - adaptive)
  double q25 = 0.0;
  double q75 = 0.0;
  int n_pairs = 0;
};

/// Pairs records by (realization, noise_rep, n_x, snr_x, metric) and
/// summarizes random - adaptive differences. Unpaired cells are an error.
std::vector<DiffSummaryRow> summarize_differences(const ResultTable& table);

struct BatchStudyRow {
  int n_x = 0;
  int b = 0;
  double mean_pred_variance = 0.0;
  double rmspe = 0.0;
};

/// Adaptive designs across (n_X, b) pairs (b <= n_X), reporting the mean
/// per-BAU prediction variance and RMSPE after the design completes,
/// averaged over the configured realizations.
std::vector<BatchStudyRow> run_batch_study(const BatchStudyConfig& cfg);

struct SummaryStats {
  double min = 0.0, q1 = 0.0, median = 0.0, mean = 0.0, q3 = 0.0, max = 0.0, sd = 0.0;
  int count = 0;
};

SummaryStats summary_stats(const std::vector<double>& values);

struct OsseReport {
  SummaryStats process, stations, proxy;
  std::vector<int> sites;          // selection order
  bool sites_all_risk = false;     // every site in the T = 1 region
  double min_site_spacing = 0.0;   // min pairwise distance between sites
  double pre_mean_sd_sensors = 0.0;   // mean prediction SD over sensor BAUs, Z+Q only
  double post_mean_sd_sensors = 0.0;  // same after sensor data
  MetricRecord no_x;                  // metrics with Z+Q only
  std::vector<MetricRecord> with_x;   // one per sensor-noise draw
};

/// The masked-domain end-to-end experiment: conditional truth from the proxy
/// point data, stations + block-averaged proxies, risk-weighted adaptive
/// placement, and a Monte Carlo assessment over repeated sensor-noise draws
/// at the fixed selected sites. Writes artifacts when out_dir is non-empty.
OsseReport run_osse(const OsseConfig& cfg, const std::string& out_dir);

}  // namespace frkd
