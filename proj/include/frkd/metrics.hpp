#pragma once

#include <Eigen/Dense>
#include <vector>

namespace frkd {

/// Truth, predictions, and predictive SDs at the validation BAUs.
struct ValidationSet {
  std::vector<int> indices;
  Eigen::VectorXd truth;
  Eigen::VectorXd pred_mean;
  Eigen::VectorXd pred_sd;
};

/// Mean absolute prediction error. Table headers elsewhere also call this
/// MAE; the two names refer to the same quantity.
double mape(const ValidationSet& v);
inline double mae(const ValidationSet& v) { return mape(v); }

double rmspe(const ValidationSet& v);

/// Signed mean prediction error (truth - prediction).
double mpe(const ValidationSet& v);

/// Closed-form CRPS of a Gaussian predictive distribution; at sd = 0 it
/// degenerates to |y - mean|.
double crps_gaussian(double mean, double sd, double y);

struct MetricRecord {
  double mape = 0.0;
  double rmspe = 0.0;
  double mpe = 0.0;
  double crps = 0.0;
};

/// All four metrics; CRPS is averaged over the validation locations.
MetricRecord score(const ValidationSet& v);

}  // namespace frkd
