#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "frkd/design.hpp"
#include "frkd/frk.hpp"
#include "frkd/geometry.hpp"
#include "frkd/gpsim.hpp"

namespace frkd {

/// Rejects keys outside `allowed` (typos in config files are errors, not
/// silently ignored).
void require_keys(const nlohmann::json& j, const std::string& context,
                  const std::vector<std::string>& allowed);

nlohmann::json load_json_file(const std::string& path);

struct GridConfig {
  int nx = 0;
  int ny = 0;
  double xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;

  Domain domain() const { return {xmin, xmax, ymin, ymax}; }
  BauGrid grid() const { return {domain(), nx, ny}; }
};

struct BasisConfig {
  int n_res = 2;
  int coarsest_per_axis = 3;
  bool quad4 = false;
};

GridConfig parse_grid(const nlohmann::json& j, const std::string& context);
BasisConfig parse_basis(const nlohmann::json& j, const std::string& context);
CovarianceSpec parse_covariance(const nlohmann::json& j, const std::string& context);
EmOptions parse_em(const nlohmann::json& j, const std::string& context);
SpacingScope parse_scope(const std::string& s, const std::string& context);

/// Configuration of the multi-factor simulation experiment (batch size is
/// fixed at 1 here; the batch study varies it).
struct FactorialConfig {
  GridConfig grid{50, 50, 0, 1, 0, 1};
  CovarianceSpec cov{1.0, 0.3};
  int n_stations = 50;
  int n_clusters = 5;
  std::optional<std::string> station_file;
  double snr_z = 9.0;
  double snr_q = 1.0;
  int proxy_nx = 10;
  int proxy_ny = 10;
  std::vector<int> n_x_levels{10, 70};
  std::vector<double> snr_x_levels{1.0, 9.0};
  double min_spacing = 0.1;
  SpacingScope scope = SpacingScope::WithinBatch;
  int realizations = 20;  // process draws
  int noise_reps = 10;    // sensor-noise repetitions per condition
  std::uint64_t seed = 1;
  BasisConfig basis;
  EmOptions em;
};

FactorialConfig parse_factorial(const nlohmann::json& j);

struct BatchStudyConfig {
  GridConfig grid{50, 50, 0, 1, 0, 1};
  CovarianceSpec cov{1.0, 0.3};
  int n_stations = 50;
  int n_clusters = 5;
  std::optional<std::string> station_file;
  double snr_z = 9.0;
  double snr_q = 1.0;
  int proxy_nx = 10;
  int proxy_ny = 10;
  std::vector<int> n_x_levels{10, 30, 50, 70};
  std::vector<int> batch_levels{1, 3, 30};
  double snr_x = 9.0;
  double min_spacing = 0.1;
  SpacingScope scope = SpacingScope::WithinBatch;
  int realizations = 1;
  std::uint64_t seed = 1;
  BasisConfig basis;
  EmOptions em;
};

BatchStudyConfig parse_batch_study(const nlohmann::json& j);

/// Observing-system simulation experiment over an irregular (masked) domain
/// with risk-weighted adaptive sampling.
struct OsseConfig {
  GridConfig grid;
  CovarianceSpec cov{0.76, 35.8};
  int coarse_nx = 0;
  int coarse_ny = 0;
  std::string mask_file;
  std::string station_file;      // x,y
  std::string proxy_point_file;  // x,y,value: data for the conditional truth
  std::string block_sd_file;     // block_index,sd
  std::string risk1_file;        // bau_index,value
  std::string risk2_file;
  double snr_z = 7.0;
  double snr_x = 4.0;
  int n_sensors = 20;
  int batch_size = 1;
  double min_spacing = 3.0;
  double lambda = 1.0;
  SpacingScope scope = SpacingScope::Global;
  int noise_draws = 100;
  std::uint64_t seed = 1;
  BasisConfig basis;
  EmOptions em;
};

OsseConfig parse_osse(const nlohmann::json& j);

}  // namespace frkd
