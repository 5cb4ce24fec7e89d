#include "frkd/basis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "frkd/kernels.hpp"

namespace frkd {

BasisSet BasisSet::multires(const Domain& domain, int n_res, int coarsest_per_axis) {
  if (n_res < 1) throw std::invalid_argument("BasisSet: n_res must be >= 1");
  if (coarsest_per_axis < 2) {
    throw std::invalid_argument("BasisSet: coarsest_per_axis must be >= 2");
  }
  BasisSet basis;
  for (int m = 0; m < n_res; ++m) {
    const int per_axis = coarsest_per_axis << m;
    if (per_axis > 4096) throw std::invalid_argument("BasisSet: resolution too fine");
    const double sx = domain.width() / per_axis;
    const double sy = domain.height() / per_axis;
    const double aperture = 1.5 * std::max(sx, sy);
    for (int iy = 0; iy < per_axis; ++iy) {
      for (int ix = 0; ix < per_axis; ++ix) {
        basis.funcs_.push_back({{domain.xmin + (ix + 0.5) * sx,
                                 domain.ymin + (iy + 0.5) * sy},
                                aperture,
                                m});
      }
    }
    basis.per_res_.push_back(per_axis * per_axis);
  }
  return basis;
}

BasisSet BasisSet::from_functions(std::vector<BasisFunction> funcs) {
  if (funcs.empty()) throw std::invalid_argument("BasisSet: empty function list");
  int max_res = 0;
  for (const auto& f : funcs) {
    if (!(f.aperture > 0.0)) throw std::invalid_argument("BasisSet: aperture must be > 0");
    if (f.resolution < 0) throw std::invalid_argument("BasisSet: negative resolution");
    max_res = std::max(max_res, f.resolution);
  }
  BasisSet basis;
  basis.per_res_.assign(max_res + 1, 0);
  // Keep resolutions contiguous in storage (coarse first) so K stays block
  // diagonal with one block per resolution.
  std::stable_sort(funcs.begin(), funcs.end(),
                   [](const BasisFunction& a, const BasisFunction& b) {
                     return a.resolution < b.resolution;
                   });
  for (const auto& f : funcs) basis.per_res_[f.resolution]++;
  basis.funcs_ = std::move(funcs);
  return basis;
}

Eigen::VectorXd BasisSet::evaluate_at(const Location& s) const {
  Eigen::VectorXd phi(size());
  for (int l = 0; l < size(); ++l) {
    const auto& f = funcs_[l];
    const double dx = s.x - f.center.x;
    const double dy = s.y - f.center.y;
    const double d2 = dx * dx + dy * dy;
    const double a2 = f.aperture * f.aperture;
    if (d2 < a2) {
      const double t = 1.0 - d2 / a2;
      phi[l] = t * t;
    } else {
      phi[l] = 0.0;
    }
  }
  return phi;
}

Eigen::MatrixXd BasisSet::evaluate_matrix(const BauGrid& grid, bool quad4) const {
  if (size() > grid.size()) {
    throw std::invalid_argument("BasisSet: more basis functions than BAUs");
  }
  const auto& ops = kernels::active();
  const std::size_t n = static_cast<std::size_t>(grid.size());
  Eigen::MatrixXd s(grid.size(), size());
  std::vector<double> d2(n);

  if (!quad4) {
    const auto& xs = grid.centroid_xs();
    const auto& ys = grid.centroid_ys();
    for (int l = 0; l < size(); ++l) {
      const auto& f = funcs_[l];
      ops.dist2_to_point(xs.data(), ys.data(), n, f.center.x, f.center.y, d2.data());
      ops.bisquare_from_dist2(d2.data(), s.col(l).data(), n, f.aperture);
    }
    return s;
  }

  // 4-point quadrature at the quarter points of each cell.
  const double qx = 0.25 * grid.cell_width();
  const double qy = 0.25 * grid.cell_height();
  const double offs[4][2] = {{-qx, -qy}, {qx, -qy}, {-qx, qy}, {qx, qy}};
  s.setZero();
  std::vector<double> col(n);
  std::vector<double> px(n), py(n);
  for (const auto& off : offs) {
    for (std::size_t i = 0; i < n; ++i) {
      px[i] = grid.centroid_xs()[i] + off[0];
      py[i] = grid.centroid_ys()[i] + off[1];
    }
    for (int l = 0; l < size(); ++l) {
      const auto& f = funcs_[l];
      ops.dist2_to_point(px.data(), py.data(), n, f.center.x, f.center.y, d2.data());
      ops.bisquare_from_dist2(d2.data(), col.data(), n, f.aperture);
      for (std::size_t i = 0; i < n; ++i) s(static_cast<Eigen::Index>(i), l) += 0.25 * col[i];
    }
  }
  return s;
}

nlohmann::json BasisSet::to_json() const {
  nlohmann::json j;
  j["functions"] = nlohmann::json::array();
  for (const auto& f : funcs_) {
    j["functions"].push_back({{"x", f.center.x},
                              {"y", f.center.y},
                              {"aperture", f.aperture},
                              {"resolution", f.resolution}});
  }
  return j;
}

BasisSet BasisSet::from_json(const nlohmann::json& j) {
  std::vector<BasisFunction> funcs;
  for (const auto& e : j.at("functions")) {
    funcs.push_back({{e.at("x").get<double>(), e.at("y").get<double>()},
                     e.at("aperture").get<double>(),
                     e.at("resolution").get<int>()});
  }
  return from_functions(std::move(funcs));
}

}  // namespace frkd
