#pragma once

#include <Eigen/Dense>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "frkd/geometry.hpp"

namespace frkd {

struct BasisFunction {
  Location center;
  double aperture = 0.0;  // support radius
  int resolution = 0;
};

/// Multi-resolution set of compactly supported bisquare functions,
/// phi(s) = (1 - (d/a)^2)^2 for d < a, with d the distance to the center and
/// a the aperture. Resolution m places a regular (coarsest_per_axis * 2^m)^2
/// lattice of centers; the aperture is 1.5x the center spacing of that
/// resolution, so neighboring supports overlap.
class BasisSet {
 public:
  static BasisSet multires(const Domain& domain, int n_res, int coarsest_per_axis);

  /// Explicit construction (single or mixed resolutions); used for tests and
  /// for full-rank configurations where centers coincide with BAU centroids.
  static BasisSet from_functions(std::vector<BasisFunction> funcs);

  int size() const { return static_cast<int>(funcs_.size()); }
  int n_resolutions() const { return static_cast<int>(per_res_.size()); }
  int resolution_count(int m) const { return per_res_[m]; }
  const std::vector<BasisFunction>& functions() const { return funcs_; }

  /// phi(s): all r functions at one location.
  Eigen::VectorXd evaluate_at(const Location& s) const;

  /// N x r matrix of per-BAU basis values. By default a basis function's BAU
  /// average is approximated by its centroid value; `quad4` switches to a
  /// 4-point per-cell quadrature for verification runs.
  Eigen::MatrixXd evaluate_matrix(const BauGrid& grid, bool quad4 = false) const;

  nlohmann::json to_json() const;
  static BasisSet from_json(const nlohmann::json& j);

 private:
  std::vector<BasisFunction> funcs_;
  std::vector<int> per_res_;
};

}  // namespace frkd
