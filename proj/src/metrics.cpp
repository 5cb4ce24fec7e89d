#include "frkd/metrics.hpp"

#include <cmath>
#include <stdexcept>

#include "frkd/kernels.hpp"

namespace frkd {

namespace {

void check(const ValidationSet& v) {
  const auto n = v.truth.size();
  if (n < 1 || v.pred_mean.size() != n ||
      (v.pred_sd.size() != 0 && v.pred_sd.size() != n)) {
    throw std::invalid_argument("ValidationSet: inconsistent lengths");
  }
}

}  // namespace

double mape(const ValidationSet& v) {
  check(v);
  const auto& ops = kernels::active();
  return ops.sum_abs_diff(v.truth.data(), v.pred_mean.data(), v.truth.size()) /
         static_cast<double>(v.truth.size());
}

double rmspe(const ValidationSet& v) {
  check(v);
  const auto& ops = kernels::active();
  return std::sqrt(ops.sum_sq_diff(v.truth.data(), v.pred_mean.data(), v.truth.size()) /
                   static_cast<double>(v.truth.size()));
}

double mpe(const ValidationSet& v) {
  check(v);
  return (v.truth - v.pred_mean).mean();
}

double crps_gaussian(double mean, double sd, double y) {
  if (sd < 0.0) throw std::invalid_argument("crps_gaussian: negative sd");
  if (sd == 0.0) return std::fabs(y - mean);
  const double z = (y - mean) / sd;
  const double cdf = 0.5 * std::erfc(-z / std::sqrt(2.0));
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
  return sd * (z * (2.0 * cdf - 1.0) + 2.0 * pdf - 1.0 / std::sqrt(M_PI));
}

MetricRecord score(const ValidationSet& v) {
  check(v);
  if (v.pred_sd.size() != v.truth.size()) {
    throw std::invalid_argument("score: predictive SDs required");
  }
  MetricRecord rec;
  rec.mape = mape(v);
  rec.rmspe = rmspe(v);
  rec.mpe = mpe(v);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < v.truth.size(); ++i) {
    acc += crps_gaussian(v.pred_mean[i], v.pred_sd[i], v.truth[i]);
  }
  rec.crps = acc / static_cast<double>(v.truth.size());
  return rec;
}

}  // namespace frkd
