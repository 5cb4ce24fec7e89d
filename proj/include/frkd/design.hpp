#pragma once

#include <Eigen/Dense>
#include <vector>

#include "frkd/frk.hpp"
#include "frkd/gpsim.hpp"
#include "frkd/rng.hpp"

namespace frkd {

/// U_i = sqrt(var_i) + lambda * T_i.
struct UtilityConfig {
  double lambda = 0.0;
  std::vector<double> risk;  // per-BAU T; empty means identically zero
};

Eigen::VectorXd utility_surface(const Prediction& pred, const UtilityConfig& cfg);

/// Whether the minimum-spacing constraint applies only within the batch
/// being assembled (the default) or also against sites from earlier batches.
enum class SpacingScope { WithinBatch, Global };

struct DesignConfig {
  int n_sensors = 0;     // n_X
  int batch_size = 1;    // b
  double min_spacing = 0.0;
  SpacingScope scope = SpacingScope::WithinBatch;
  std::vector<int> candidates;    // candidate BAU indices (stations excluded)
  bool refit_each_step = false;   // re-run EM after each batch instead of
                                  // holding the k=0 parameters fixed
};

/// Greedy singleton selection: repeatedly take the feasible candidate of
/// maximal utility, ties broken by lowest BAU index. Feasibility means
/// distance >= min_spacing to every site chosen earlier in this batch and to
/// every entry of `already_selected`. Stops early when nothing is feasible.
std::vector<int> select_batch(const Eigen::VectorXd& utility,
                              const std::vector<int>& candidates, int batch_size,
                              double min_spacing, const BauGrid& grid,
                              const std::vector<int>& already_selected);

struct DesignStep {
  int step = 0;
  std::vector<int> selected;
  double mean_variance = 0.0;  // over the prediction support, after this batch
};

struct DesignTrace {
  std::vector<DesignStep> steps;
  std::vector<int> sites;  // all selected BAUs in selection order
  ObservationSet final_obs;
  Prediction final_pred;
  ModelParams params;
  FitResult initial_fit;
  bool complete = true;  // false when spacing exhausted the candidates early
};

/// The adaptive loop: fit on (Z, Q), then alternate utility maximization,
/// batch selection, sensor-data generation from the truth, and augmentation
/// until n_sensors sites are placed. `support` restricts the variance
/// summaries to a subset of BAUs (irregular domains); selection is always
/// restricted to `cfg.candidates`.
DesignTrace run_adaptive_design(const ObservationSet& initial_obs, const BasisSet& basis,
                                const Eigen::MatrixXd& s_matrix, const TrendSpec& trend,
                                const DesignConfig& cfg, const UtilityConfig& util_cfg,
                                double sensor_error_var, const FieldRealization& truth,
                                const BauGrid& grid, Rng rng, const EmOptions& em = {},
                                const std::vector<int>* support = nullptr,
                                const FitResult* initial_fit = nullptr);

/// Uniform sample without replacement, no spacing constraint. Returned
/// ascending.
std::vector<int> run_random_design(const std::vector<int>& candidates, int n, Rng rng);

}  // namespace frkd
