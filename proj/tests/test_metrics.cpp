#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "frkd/metrics.hpp"
#include "frkd/rng.hpp"
#include "oracles.hpp"

using namespace frkd;

namespace {

ValidationSet make_set(const std::vector<double>& truth, const std::vector<double>& pred,
                       const std::vector<double>& sd = {}) {
  ValidationSet v;
  const auto n = static_cast<Eigen::Index>(truth.size());
  v.indices.resize(truth.size());
  std::iota(v.indices.begin(), v.indices.end(), 0);
  v.truth = Eigen::Map<const Eigen::VectorXd>(truth.data(), n);
  v.pred_mean = Eigen::Map<const Eigen::VectorXd>(pred.data(), n);
  if (!sd.empty()) {
    v.pred_sd = Eigen::Map<const Eigen::VectorXd>(sd.data(), n);
  }
  return v;
}

}  // namespace

TEST_CASE("point metrics on hand cases") {
  const auto perfect = make_set({1, 2, 3}, {1, 2, 3}, {0, 0, 0});
  CHECK(mape(perfect) == 0.0);
  CHECK(rmspe(perfect) == 0.0);
  CHECK(mpe(perfect) == 0.0);
  const MetricRecord rec = score(perfect);
  CHECK(rec.mape == 0.0);
  CHECK(rec.rmspe == 0.0);
  CHECK(rec.mpe == 0.0);
  CHECK(rec.crps == 0.0);

  const auto pm1 = make_set({1, -1}, {0, 0});
  CHECK(mape(pm1) == doctest::Approx(1.0));
  CHECK(rmspe(pm1) == doctest::Approx(1.0));
  CHECK(mpe(pm1) == doctest::Approx(0.0));

  const auto biased = make_set({1.2, 2.4, 3.6}, {1, 2, 3});
  CHECK(mpe(biased) == doctest::Approx(0.4).epsilon(1e-12));

  // Homogeneity: doubling the errors doubles MAPE.
  const auto once = make_set({1, 0}, {0, 0});
  const auto twice = make_set({2, 0}, {0, 0});
  CHECK(mape(twice) == doctest::Approx(2.0 * mape(once)));

  // MAE is the same quantity.
  CHECK(mae(biased) == mape(biased));
}

TEST_CASE("rmspe dominates mape and the variance identity holds") {
  Rng rng(10);
  for (int t = 0; t < 100; ++t) {
    const int n = 2 + static_cast<int>(rng.next_below(20));
    std::vector<double> truth(n), pred(n, 0.0);
    for (auto& v : truth) v = rng.next_gaussian();
    const auto set = make_set(truth, pred);
    CHECK(rmspe(set) >= mape(set) - 1e-14);

    // rmspe^2 = mpe^2 + mean((e - mean(e))^2)
    const double e_mean = mpe(set);
    double centered = 0.0;
    for (double v : truth) centered += (v - e_mean) * (v - e_mean);
    centered /= n;
    CHECK(rmspe(set) * rmspe(set) ==
          doctest::Approx(e_mean * e_mean + centered).epsilon(1e-12));
  }
}

TEST_CASE("metrics are permutation invariant") {
  std::vector<double> truth = {0.5, -1.2, 2.0, 0.0, 3.3};
  std::vector<double> pred = {0.4, -1.0, 2.5, 0.1, 3.0};
  std::vector<double> sd = {0.1, 0.2, 0.3, 0.4, 0.5};
  const MetricRecord a = score(make_set(truth, pred, sd));

  const std::vector<int> perm = {4, 2, 0, 1, 3};
  std::vector<double> t2, p2, s2;
  for (int i : perm) {
    t2.push_back(truth[i]);
    p2.push_back(pred[i]);
    s2.push_back(sd[i]);
  }
  const MetricRecord b = score(make_set(t2, p2, s2));
  CHECK(a.mape == doctest::Approx(b.mape).epsilon(1e-14));
  CHECK(a.rmspe == doctest::Approx(b.rmspe).epsilon(1e-14));
  CHECK(a.mpe == doctest::Approx(b.mpe).epsilon(1e-14));
  CHECK(a.crps == doctest::Approx(b.crps).epsilon(1e-14));
}

TEST_CASE("gaussian crps") {
  SUBCASE("point-mass degeneracy") {
    CHECK(crps_gaussian(1.0, 0.0, 1.3) == doctest::Approx(0.3).epsilon(1e-12));
  }

  SUBCASE("standard normal at its center") {
    CHECK(crps_gaussian(0.0, 1.0, 0.0) == doctest::Approx(0.23370).epsilon(1e-4));
    CHECK(crps_gaussian(0.0, 1.0, 0.0) ==
          doctest::Approx(oracles::crps_quadrature(0.0, 1.0, 0.0)).epsilon(1e-6));
  }

  SUBCASE("matches quadrature on random triples") {
    Rng rng(3);
    for (int t = 0; t < 100; ++t) {
      const double mu = 2.0 * rng.next_gaussian();
      const double sd = 0.1 + 2.0 * rng.next_double();
      const double y = mu + 4.0 * rng.next_gaussian();
      const double closed = crps_gaussian(mu, sd, y);
      const double quad = oracles::crps_quadrature(mu, sd, y);
      CHECK(closed == doctest::Approx(quad).epsilon(1e-6));
    }
  }

  SUBCASE("scale equivariance") {
    Rng rng(4);
    for (int t = 0; t < 20; ++t) {
      const double sigma = 0.1 + 3.0 * rng.next_double();
      const double z = rng.next_gaussian();
      CHECK(crps_gaussian(0.0, sigma, sigma * z) ==
            doctest::Approx(sigma * crps_gaussian(0.0, 1.0, z)).epsilon(1e-10));
    }
  }

  SUBCASE("sd must be non-negative") {
    CHECK_THROWS_AS(crps_gaussian(0.0, -0.1, 0.0), std::invalid_argument);
  }

  SUBCASE("propriety spot check: the true scale scores best") {
    Rng rng(5);
    const int n = 10000;
    double true_scale = 0.0, wide = 0.0, narrow = 0.0;
    for (int i = 0; i < n; ++i) {
      const double y = rng.next_gaussian();
      true_scale += crps_gaussian(0.0, 1.0, y);
      wide += crps_gaussian(0.0, 2.0, y);
      narrow += crps_gaussian(0.0, 0.5, y);
    }
    CHECK(true_scale < wide);
    CHECK(true_scale < narrow);
  }
}

TEST_CASE("score matches independently coded formulas") {
  Rng rng(6);
  const int n = 10;
  std::vector<double> truth(n), pred(n), sd(n);
  for (int i = 0; i < n; ++i) {
    truth[i] = rng.next_gaussian();
    pred[i] = rng.next_gaussian();
    sd[i] = 0.2 + rng.next_double();
  }
  const MetricRecord rec = score(make_set(truth, pred, sd));

  double abs_sum = 0, sq_sum = 0, sum = 0, crps_sum = 0;
  for (int i = 0; i < n; ++i) {
    const double e = truth[i] - pred[i];
    abs_sum += std::fabs(e);
    sq_sum += e * e;
    sum += e;
    crps_sum += oracles::crps_quadrature(pred[i], sd[i], truth[i]);
  }
  CHECK(rec.mape == doctest::Approx(abs_sum / n).epsilon(1e-12));
  CHECK(rec.rmspe == doctest::Approx(std::sqrt(sq_sum / n)).epsilon(1e-12));
  CHECK(rec.mpe == doctest::Approx(sum / n).epsilon(1e-12));
  CHECK(rec.crps == doctest::Approx(crps_sum / n).epsilon(1e-6));
}
