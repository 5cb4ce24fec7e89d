// AVX2/FMA variants of the inner-loop kernels. This TU is compiled with
// -mavx2 -mfma and must only be entered after the runtime CPU check in
// avx2_table().

#include "frkd/kernels.hpp"

#include <immintrin.h>

#include <cmath>
#include <limits>

namespace frkd::kernels {
namespace detail {

namespace {

// Vector exp for doubles, Cephes-style: x = n*ln2 + r with |r| <= ln2/2,
// exp(r) from a rational approximation, result scaled by 2^n through the
// exponent bits. Accurate to ~1-2 ulp; arguments outside [-708, 709] flush
// to 0 / inf like std::exp.
inline __m256d exp4d(__m256d x) {
  const __m256d log2e = _mm256_set1_pd(1.4426950408889634073599);
  const __m256d ln2_hi = _mm256_set1_pd(6.93145751953125e-1);
  const __m256d ln2_lo = _mm256_set1_pd(1.42860682030941723212e-6);
  const __m256d p0 = _mm256_set1_pd(1.26177193074810590878e-4);
  const __m256d p1 = _mm256_set1_pd(3.02994407707441961300e-2);
  const __m256d p2 = _mm256_set1_pd(9.99999999999999999910e-1);
  const __m256d q0 = _mm256_set1_pd(3.00198505138664455042e-6);
  const __m256d q1 = _mm256_set1_pd(2.52448340349684104192e-3);
  const __m256d q2 = _mm256_set1_pd(2.27265548208155028766e-1);
  const __m256d q3 = _mm256_set1_pd(2.00000000000000000005e0);
  const __m256d max_x = _mm256_set1_pd(709.0);
  const __m256d min_x = _mm256_set1_pd(-708.0);

  const __m256d xc = _mm256_min_pd(_mm256_max_pd(x, min_x), max_x);

  const __m256d nf = _mm256_round_pd(_mm256_mul_pd(xc, log2e),
                                     _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(nf, ln2_hi, xc);
  r = _mm256_fnmadd_pd(nf, ln2_lo, r);
  const __m256d r2 = _mm256_mul_pd(r, r);

  __m256d p = _mm256_fmadd_pd(p0, r2, p1);
  p = _mm256_fmadd_pd(p, r2, p2);
  p = _mm256_mul_pd(p, r);
  __m256d q = _mm256_fmadd_pd(q0, r2, q1);
  q = _mm256_fmadd_pd(q, r2, q2);
  q = _mm256_fmadd_pd(q, r2, q3);

  __m256d e = _mm256_div_pd(p, _mm256_sub_pd(q, p));
  e = _mm256_fmadd_pd(e, _mm256_set1_pd(2.0), _mm256_set1_pd(1.0));

  // 2^n via the biased exponent field; |n| <= 1024 so the int32 round-trip
  // is exact.
  const __m128i n32 = _mm256_cvtpd_epi32(nf);
  const __m256i n64 = _mm256_cvtepi32_epi64(n32);
  const __m256i pow2 =
      _mm256_slli_epi64(_mm256_add_epi64(n64, _mm256_set1_epi64x(1023)), 52);
  e = _mm256_mul_pd(e, _mm256_castsi256_pd(pow2));

  e = _mm256_blendv_pd(e, _mm256_setzero_pd(), _mm256_cmp_pd(x, min_x, _CMP_LT_OQ));
  e = _mm256_blendv_pd(e, _mm256_set1_pd(std::numeric_limits<double>::infinity()),
                       _mm256_cmp_pd(x, max_x, _CMP_GT_OQ));
  return e;
}

inline double hsum4d(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

void expcov_from_dist2_avx2(const double* d2, double* out, std::size_t n,
                            double sigma2, double inv_range) {
  const __m256d s2 = _mm256_set1_pd(sigma2);
  const __m256d neg_ir = _mm256_set1_pd(-inv_range);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sqrt_pd(_mm256_loadu_pd(d2 + i));
    const __m256d e = exp4d(_mm256_mul_pd(d, neg_ir));
    _mm256_storeu_pd(out + i, _mm256_mul_pd(s2, e));
  }
  for (; i < n; ++i) out[i] = sigma2 * std::exp(-std::sqrt(d2[i]) * inv_range);
}

void dist2_to_point_avx2(const double* xs, const double* ys, std::size_t n,
                         double px, double py, double* out) {
  const __m256d pxv = _mm256_set1_pd(px);
  const __m256d pyv = _mm256_set1_pd(py);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(xs + i), pxv);
    const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(ys + i), pyv);
    _mm256_storeu_pd(out + i, _mm256_fmadd_pd(dy, dy, _mm256_mul_pd(dx, dx)));
  }
  for (; i < n; ++i) {
    const double dx = xs[i] - px;
    const double dy = ys[i] - py;
    out[i] = dx * dx + dy * dy;
  }
}

void bisquare_from_dist2_avx2(const double* d2, double* out, std::size_t n,
                              double aperture) {
  const double a2s = aperture * aperture;
  const __m256d a2 = _mm256_set1_pd(a2s);
  const __m256d inv_a2 = _mm256_set1_pd(1.0 / a2s);
  const __m256d one = _mm256_set1_pd(1.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_loadu_pd(d2 + i);
    const __m256d t = _mm256_fnmadd_pd(d, inv_a2, one);
    const __m256d v = _mm256_mul_pd(t, t);
    const __m256d mask = _mm256_cmp_pd(d, a2, _CMP_LT_OQ);
    _mm256_storeu_pd(out + i, _mm256_and_pd(v, mask));
  }
  const double inv = 1.0 / a2s;
  for (; i < n; ++i) {
    if (d2[i] < a2s) {
      const double t = 1.0 - d2[i] * inv;
      out[i] = t * t;
    } else {
      out[i] = 0.0;
    }
  }
}

double sum_avx2(const double* a, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(a + i));
  double s = hsum4d(acc);
  for (; i < n; ++i) s += a[i];
  return s;
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
  }
  double s = hsum4d(acc);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sum_abs_diff_avx2(const double* a, const double* b, std::size_t n) {
  const __m256d abs_mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_add_pd(acc, _mm256_and_pd(d, abs_mask));
  }
  double s = hsum4d(acc);
  for (; i < n; ++i) s += std::fabs(a[i] - b[i]);
  return s;
}

double sum_sq_diff_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_fmadd_pd(d, d, acc);
  }
  double s = hsum4d(acc);
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace

const Ops* avx2_table() {
  if (!__builtin_cpu_supports("avx2") || !__builtin_cpu_supports("fma")) {
    return nullptr;
  }
  static const Ops table{
      "avx2",
      expcov_from_dist2_avx2,
      dist2_to_point_avx2,
      bisquare_from_dist2_avx2,
      sum_avx2,
      dot_avx2,
      sum_abs_diff_avx2,
      sum_sq_diff_avx2,
  };
  return &table;
}

}  // namespace detail
}  // namespace frkd::kernels
