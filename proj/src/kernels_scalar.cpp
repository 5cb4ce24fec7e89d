#include "frkd/kernels.hpp"

#include <cmath>

namespace frkd::kernels {

namespace {

void expcov_from_dist2_scalar(const double* d2, double* out, std::size_t n,
                              double sigma2, double inv_range) {
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = sigma2 * std::exp(-std::sqrt(d2[i]) * inv_range);
  }
}

void dist2_to_point_scalar(const double* xs, const double* ys, std::size_t n,
                           double px, double py, double* out) {
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - px;
    const double dy = ys[i] - py;
    out[i] = dx * dx + dy * dy;
  }
}

void bisquare_from_dist2_scalar(const double* d2, double* out, std::size_t n,
                                double aperture) {
  const double a2 = aperture * aperture;
  const double inv_a2 = 1.0 / a2;
  for (std::size_t i = 0; i < n; ++i) {
    if (d2[i] < a2) {
      const double t = 1.0 - d2[i] * inv_a2;
      out[i] = t * t;
    } else {
      out[i] = 0.0;
    }
  }
}

double sum_scalar(const double* a, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i];
  return s;
}

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sum_abs_diff_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::fabs(a[i] - b[i]);
  return s;
}

double sum_sq_diff_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace

const Ops& scalar() {
  static const Ops table{
      "scalar",
      expcov_from_dist2_scalar,
      dist2_to_point_scalar,
      bisquare_from_dist2_scalar,
      sum_scalar,
      dot_scalar,
      sum_abs_diff_scalar,
      sum_sq_diff_scalar,
  };
  return table;
}

}  // namespace frkd::kernels
