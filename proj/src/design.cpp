#include "frkd/design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace frkd {

Eigen::VectorXd utility_surface(const Prediction& pred, const UtilityConfig& cfg) {
  Eigen::VectorXd u = pred.variance.cwiseMax(0.0).cwiseSqrt();
  if (!cfg.risk.empty()) {
    if (static_cast<Eigen::Index>(cfg.risk.size()) != u.size()) {
      throw std::invalid_argument("utility_surface: risk field length mismatch");
    }
    for (Eigen::Index i = 0; i < u.size(); ++i) u[i] += cfg.lambda * cfg.risk[i];
  }
  return u;
}

std::vector<int> select_batch(const Eigen::VectorXd& utility,
                              const std::vector<int>& candidates, int batch_size,
                              double min_spacing, const BauGrid& grid,
                              const std::vector<int>& already_selected) {
  if (candidates.empty()) throw std::invalid_argument("select_batch: empty candidate set");

  std::vector<int> pool = candidates;
  std::sort(pool.begin(), pool.end());
  pool.erase(std::unique(pool.begin(), pool.end()), pool.end());

  std::vector<int> exclusion = already_selected;
  std::vector<int> chosen;
  chosen.reserve(batch_size);

  const auto feasible = [&](int c) {
    const Location sc = grid.centroid(c);
    for (int s : chosen) {
      if (euclidean_distance(sc, grid.centroid(s)) < min_spacing) return false;
    }
    for (int s : exclusion) {
      if (euclidean_distance(sc, grid.centroid(s)) < min_spacing) return false;
    }
    return true;
  };

  std::vector<bool> taken(pool.size(), false);
  for (int slot = 0; slot < batch_size; ++slot) {
    int best = -1;
    double best_u = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < pool.size(); ++k) {
      if (taken[k]) continue;
      const int c = pool[k];
      if (utility[c] <= best_u) continue;  // ascending scan → ties keep lowest index
      if (!feasible(c)) continue;
      best = static_cast<int>(k);
      best_u = utility[c];
    }
    if (best < 0) break;  // no feasible candidate left
    taken[best] = true;
    chosen.push_back(pool[best]);
  }
  return chosen;
}

namespace {

double mean_over(const Eigen::VectorXd& values, const std::vector<int>* support) {
  if (support == nullptr || support->empty()) return values.mean();
  double s = 0.0;
  for (int i : *support) s += values[i];
  return s / static_cast<double>(support->size());
}

}  // namespace

DesignTrace run_adaptive_design(const ObservationSet& initial_obs, const BasisSet& basis,
                                const Eigen::MatrixXd& s_matrix, const TrendSpec& trend,
                                const DesignConfig& cfg, const UtilityConfig& util_cfg,
                                double sensor_error_var, const FieldRealization& truth,
                                const BauGrid& grid, Rng rng, const EmOptions& em,
                                const std::vector<int>* support,
                                const FitResult* initial_fit) {
  if (cfg.n_sensors < 1) throw std::invalid_argument("run_adaptive_design: n_sensors < 1");
  if (cfg.batch_size < 1 || cfg.batch_size > cfg.n_sensors) {
    throw std::invalid_argument("run_adaptive_design: batch size must be in [1, n_sensors]");
  }
  if (cfg.candidates.empty()) {
    throw std::invalid_argument("run_adaptive_design: empty candidate set");
  }
  if (!(sensor_error_var > 0.0)) {
    throw std::invalid_argument("run_adaptive_design: sensor error variance must be > 0");
  }
  if (static_cast<int>(truth.values.size()) != grid.size()) {
    throw std::invalid_argument("run_adaptive_design: truth does not match grid");
  }

  DesignTrace trace;
  trace.initial_fit = initial_fit != nullptr
                          ? *initial_fit
                          : em_fit(initial_obs, basis, s_matrix, trend, std::nullopt, em);
  trace.params = trace.initial_fit.params;

  ObservationSet obs = initial_obs;
  Prediction pred = trace.initial_fit.pred;
  std::vector<int> remaining = cfg.candidates;
  std::sort(remaining.begin(), remaining.end());
  remaining.erase(std::unique(remaining.begin(), remaining.end()), remaining.end());

  const double sensor_sd = std::sqrt(sensor_error_var);
  static const std::vector<int> kNoExclusion;
  int placed = 0;
  int step = 0;
  while (placed < cfg.n_sensors) {
    const int want = std::min(cfg.batch_size, cfg.n_sensors - placed);
    const Eigen::VectorXd utility = utility_surface(pred, util_cfg);
    const auto& exclusion =
        cfg.scope == SpacingScope::Global ? trace.sites : kNoExclusion;
    const std::vector<int> batch =
        select_batch(utility, remaining, want, cfg.min_spacing, grid, exclusion);
    if (batch.empty()) {
      trace.complete = false;  // spacing left nothing feasible; report short
      break;
    }

    // Sensor data: truth at the selected BAU centroids plus measurement error.
    std::vector<Location> locs;
    Eigen::VectorXd values(static_cast<Eigen::Index>(batch.size()));
    for (std::size_t i = 0; i < batch.size(); ++i) {
      locs.push_back(grid.centroid(batch[i]));
      values[static_cast<Eigen::Index>(i)] =
          truth.values[batch[i]] + sensor_sd * rng.next_gaussian();
    }
    obs = obs.augmented(make_point_block(
        ObsKind::Sensor, grid, locs, std::move(values),
        Eigen::VectorXd::Constant(static_cast<Eigen::Index>(batch.size()),
                                  sensor_error_var)));

    for (int c : batch) {
      remaining.erase(std::remove(remaining.begin(), remaining.end(), c), remaining.end());
      trace.sites.push_back(c);
    }
    placed += static_cast<int>(batch.size());

    if (cfg.refit_each_step) {
      FitResult fit = em_fit(obs, basis, s_matrix, trend, trace.params, em);
      trace.params = fit.params;
      pred = std::move(fit.pred);
    } else {
      pred = condition(obs, basis, s_matrix, trend, trace.params);
    }

    DesignStep rec;
    rec.step = step++;
    rec.selected = batch;
    rec.mean_variance = mean_over(pred.variance, support);
    trace.steps.push_back(std::move(rec));
  }

  trace.final_obs = std::move(obs);
  trace.final_pred = std::move(pred);
  return trace;
}

std::vector<int> run_random_design(const std::vector<int>& candidates, int n, Rng rng) {
  if (n < 0 || static_cast<std::size_t>(n) > candidates.size()) {
    throw std::invalid_argument("run_random_design: not enough candidates");
  }
  std::vector<int> pool = candidates;
  for (int i = 0; i < n; ++i) {
    const std::size_t j =
        i + static_cast<std::size_t>(rng.next_below(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  std::vector<int> out(pool.begin(), pool.begin() + n);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace frkd
