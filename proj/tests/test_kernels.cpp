#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "frkd/kernels.hpp"

using frkd::kernels::Ops;

namespace {

std::vector<double> random_vec(std::mt19937_64& gen, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = dist(gen);
  return v;
}

}  // namespace

TEST_CASE("scalar expcov values") {
  const auto& ops = frkd::kernels::scalar();
  const double d2[] = {0.0, 0.09, 1.0};
  double out[3];
  ops.expcov_from_dist2(d2, out, 3, 1.0, 1.0 / 0.3);
  CHECK(out[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(out[1] == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));  // |h| = tau
  CHECK(out[2] == doctest::Approx(std::exp(-1.0 / 0.3)).epsilon(1e-12));
}

TEST_CASE("scalar bisquare boundary and value") {
  const auto& ops = frkd::kernels::scalar();
  const double a = 2.0;
  const double d2[] = {0.0, 1.0, 4.0, 5.0};  // d = 0, a/2, a, > a
  double out[4];
  ops.bisquare_from_dist2(d2, out, 4, a);
  CHECK(out[0] == 1.0);
  CHECK(out[1] == doctest::Approx(0.5625).epsilon(1e-14));
  CHECK(out[2] == 0.0);
  CHECK(out[3] == 0.0);
}

TEST_CASE("dispatch table is wired") {
  const Ops& active = frkd::kernels::active();
  CHECK((std::string(active.name) == "scalar" || std::string(active.name) == "avx2"));
  const double a[] = {1.0, 2.0, 3.0};
  CHECK(active.sum(a, 3) == doctest::Approx(6.0));
}

TEST_CASE("avx2 lane matches the scalar reference") {
  const Ops* wide = frkd::kernels::avx2();
  if (wide == nullptr) return;  // host without AVX2: nothing to compare
  const Ops& ref = frkd::kernels::scalar();
  std::mt19937_64 gen(42);

  SUBCASE("expcov_from_dist2") {
    // d2 up to ~3600 covers exp arguments down to about -600/range.
    for (std::size_t n : {1u, 3u, 4u, 17u, 1024u}) {
      const auto d2 = random_vec(gen, n, 0.0, 3600.0);
      std::vector<double> a(n), b(n);
      ref.expcov_from_dist2(d2.data(), a.data(), n, 1.7, 1.0 / 0.3);
      wide->expcov_from_dist2(d2.data(), b.data(), n, 1.7, 1.0 / 0.3);
      for (std::size_t i = 0; i < n; ++i) {
        CHECK(b[i] == doctest::Approx(a[i]).epsilon(1e-14));
      }
    }
  }

  SUBCASE("expcov handles underflow range like std::exp") {
    const double d2[] = {1.0e6, 4.0e6};  // exp(-1000), exp(-2000): both 0
    double out[2];
    wide->expcov_from_dist2(d2, out, 2, 1.0, 1.0);
    CHECK(out[0] == 0.0);
    CHECK(out[1] == 0.0);
  }

  SUBCASE("dist2_to_point") {
    for (std::size_t n : {2u, 9u, 333u}) {
      const auto xs = random_vec(gen, n, -5.0, 5.0);
      const auto ys = random_vec(gen, n, -5.0, 5.0);
      std::vector<double> a(n), b(n);
      ref.dist2_to_point(xs.data(), ys.data(), n, 0.3, -1.2, a.data());
      wide->dist2_to_point(xs.data(), ys.data(), n, 0.3, -1.2, b.data());
      for (std::size_t i = 0; i < n; ++i) {
        CHECK(b[i] == doctest::Approx(a[i]).epsilon(1e-14));
      }
    }
  }

  SUBCASE("bisquare_from_dist2, incl. exact zero outside support") {
    for (std::size_t n : {5u, 64u, 257u}) {
      const auto d2 = random_vec(gen, n, 0.0, 9.0);
      std::vector<double> a(n), b(n);
      ref.bisquare_from_dist2(d2.data(), a.data(), n, 2.0);
      wide->bisquare_from_dist2(d2.data(), b.data(), n, 2.0);
      for (std::size_t i = 0; i < n; ++i) {
        if (d2[i] >= 4.0) {
          CHECK(a[i] == 0.0);
          CHECK(b[i] == 0.0);
        } else {
          CHECK(b[i] == doctest::Approx(a[i]).epsilon(1e-14));
        }
      }
    }
  }

  SUBCASE("reductions") {
    for (std::size_t n : {1u, 7u, 4096u}) {
      const auto a = random_vec(gen, n, -2.0, 2.0);
      const auto b = random_vec(gen, n, -2.0, 2.0);
      CHECK(wide->sum(a.data(), n) == doctest::Approx(ref.sum(a.data(), n)).epsilon(1e-12));
      CHECK(wide->dot(a.data(), b.data(), n) ==
            doctest::Approx(ref.dot(a.data(), b.data(), n)).epsilon(1e-12));
      CHECK(wide->sum_abs_diff(a.data(), b.data(), n) ==
            doctest::Approx(ref.sum_abs_diff(a.data(), b.data(), n)).epsilon(1e-12));
      CHECK(wide->sum_sq_diff(a.data(), b.data(), n) ==
            doctest::Approx(ref.sum_sq_diff(a.data(), b.data(), n)).epsilon(1e-12));
    }
  }
}
