#pragma once

#include <cstddef>

namespace frkd::kernels {

/// Function table for the data-parallel inner loops (covariance assembly,
/// basis evaluation, distance scans, metric reductions). A scalar reference
/// implementation always exists; wider variants are selected at runtime and
/// equivalence-tested against the scalar path.
struct Ops {
  const char* name;

  // out[i] = sigma2 * exp(-sqrt(d2[i]) * inv_range)
  void (*expcov_from_dist2)(const double* d2, double* out, std::size_t n,
                            double sigma2, double inv_range);

  // out[i] = (xs[i] - px)^2 + (ys[i] - py)^2
  void (*dist2_to_point)(const double* xs, const double* ys, std::size_t n,
                         double px, double py, double* out);

  // out[i] = (1 - d2[i]/a^2)^2 when d2[i] < a^2, else 0
  void (*bisquare_from_dist2)(const double* d2, double* out, std::size_t n,
                              double aperture);

  double (*sum)(const double* a, std::size_t n);
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*sum_abs_diff)(const double* a, const double* b, std::size_t n);
  double (*sum_sq_diff)(const double* a, const double* b, std::size_t n);
};

const Ops& scalar();

/// AVX2+FMA table, or nullptr when the CPU (or build target) lacks it.
const Ops* avx2();

/// Dispatched table: best available lane, overridable with
/// FRKD_KERNEL=scalar|avx2 in the environment. Resolved once per process.
const Ops& active();

}  // namespace frkd::kernels
