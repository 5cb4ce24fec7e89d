#include <doctest.h>

#include <cmath>

#include <nlohmann/json.hpp>

#include "frkd/basis.hpp"
#include "frkd/rng.hpp"

using namespace frkd;

TEST_CASE("multires counts and center placement") {
  const Domain d(0, 1, 0, 1);
  const BasisSet one = BasisSet::multires(d, 1, 3);
  CHECK(one.size() == 9);
  CHECK(one.n_resolutions() == 1);

  const BasisSet two = BasisSet::multires(d, 2, 3);
  CHECK(two.size() == 45);  // 3^2 + 6^2
  CHECK(two.resolution_count(0) == 9);
  CHECK(two.resolution_count(1) == 36);
  int total = 0;
  for (int m = 0; m < two.n_resolutions(); ++m) total += two.resolution_count(m);
  CHECK(total == two.size());

  // Resolution 0 on [0,1]^2 with 3 per axis: lattice {1/6, 1/2, 5/6}.
  const auto& f0 = one.functions()[0];
  CHECK(f0.center.x == doctest::Approx(1.0 / 6.0).epsilon(1e-14));
  CHECK(f0.center.y == doctest::Approx(1.0 / 6.0).epsilon(1e-14));
  const auto& f4 = one.functions()[4];
  CHECK(f4.center.x == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(one.functions()[1].center.x - f0.center.x == doctest::Approx(1.0 / 3.0));
  CHECK(f0.aperture == doctest::Approx(0.5).epsilon(1e-14));  // 1.5 * spacing

  CHECK_THROWS_AS(BasisSet::multires(d, 0, 3), std::invalid_argument);
  CHECK_THROWS_AS(BasisSet::multires(d, 1, 1), std::invalid_argument);
}

TEST_CASE("pointwise evaluation") {
  const Domain d(0, 1, 0, 1);
  const BasisSet basis = BasisSet::multires(d, 1, 3);

  const Location center = basis.functions()[4].center;
  const Eigen::VectorXd at_center = basis.evaluate_at(center);
  CHECK(at_center[4] == 1.0);

  // Entry is zero at or beyond the aperture.
  const double a = basis.functions()[4].aperture;
  const Eigen::VectorXd at_edge = basis.evaluate_at({center.x + a, center.y});
  CHECK(at_edge[4] == 0.0);

  // d = a/2 gives (1 - 1/4)^2.
  const Eigen::VectorXd at_half = basis.evaluate_at({center.x + 0.5 * a, center.y});
  CHECK(at_half[4] == doctest::Approx(0.5625).epsilon(1e-12));
}

TEST_CASE("basis matrix over the grid") {
  const Domain d(0, 1, 0, 1);
  const BauGrid g3(d, 3, 3);
  const BasisSet basis = BasisSet::multires(d, 1, 3);

  // BAU centroids coincide with centers here.
  const Eigen::MatrixXd s = basis.evaluate_matrix(g3);
  for (int l = 0; l < 9; ++l) CHECK(s(l, l) == 1.0);
  CHECK(s.minCoeff() >= 0.0);
  CHECK(s.maxCoeff() <= 1.0);

  // Compact support is exact, and column fill respects the geometric bound.
  const BauGrid g20(d, 20, 20);
  const Eigen::MatrixXd s20 = basis.evaluate_matrix(g20);
  const double h = g20.cell_width();
  for (int l = 0; l < basis.size(); ++l) {
    int nnz = 0;
    for (int i = 0; i < g20.size(); ++i) {
      const double dist = euclidean_distance(g20.centroid(i), basis.functions()[l].center);
      if (dist >= basis.functions()[l].aperture) {
        CHECK(s20(i, l) == 0.0);
      }
      if (s20(i, l) != 0.0) ++nnz;
    }
    const double bound = std::ceil(2.0 * basis.functions()[l].aperture / h);
    CHECK(nnz <= static_cast<int>(bound * bound));
  }
}

TEST_CASE("evaluation is continuous under small perturbations") {
  const Domain d(0, 1, 0, 1);
  const BasisSet basis = BasisSet::multires(d, 2, 3);
  Rng rng(42);
  for (int t = 0; t < 50; ++t) {
    const Location s{rng.next_double(), rng.next_double()};
    const Location s2{s.x + 1e-9, s.y - 1e-9};
    const Eigen::VectorXd a = basis.evaluate_at(s);
    const Eigen::VectorXd b = basis.evaluate_at(s2);
    CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-6);
  }
}

TEST_CASE("quadrature evaluation stays near the centroid approximation") {
  const Domain d(0, 1, 0, 1);
  const BauGrid g(d, 25, 25);
  const BasisSet basis = BasisSet::multires(d, 1, 3);
  const Eigen::MatrixXd s0 = basis.evaluate_matrix(g, false);
  const Eigen::MatrixXd s4 = basis.evaluate_matrix(g, true);
  CHECK((s0 - s4).cwiseAbs().maxCoeff() <= 0.05);
}

TEST_CASE("more functions than BAUs is rejected") {
  const Domain d(0, 1, 0, 1);
  const BauGrid small(d, 6, 6);  // 36 BAUs < 45 functions
  const BasisSet basis = BasisSet::multires(d, 2, 3);
  CHECK_THROWS_AS(basis.evaluate_matrix(small), std::invalid_argument);
}

TEST_CASE("json round trip") {
  const Domain d(0, 2, 0, 1);
  const BasisSet basis = BasisSet::multires(d, 2, 3);
  const BasisSet back = BasisSet::from_json(basis.to_json());
  REQUIRE(back.size() == basis.size());
  for (int l = 0; l < basis.size(); ++l) {
    CHECK(back.functions()[l].center.x == basis.functions()[l].center.x);
    CHECK(back.functions()[l].aperture == basis.functions()[l].aperture);
    CHECK(back.functions()[l].resolution == basis.functions()[l].resolution);
  }
}
