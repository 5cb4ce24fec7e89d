#include "frkd/gpsim.hpp"

#include <cmath>
#include <stdexcept>

#include "frkd/kernels.hpp"

namespace frkd {

CovarianceSpec::CovarianceSpec(double sigma2_in, double range_in)
    : sigma2(sigma2_in), range(range_in) {
  if (!(sigma2 > 0.0) || !(range > 0.0)) {
    throw std::invalid_argument("CovarianceSpec: sigma2 and range must be > 0");
  }
}

Eigen::MatrixXd cov_matrix(std::span<const double> xs, std::span<const double> ys,
                           const CovarianceSpec& spec) {
  const auto n = static_cast<Eigen::Index>(xs.size());
  const auto& ops = kernels::active();
  Eigen::MatrixXd c(n, n);
  std::vector<double> d2(xs.size());
  const double inv_range = 1.0 / spec.range;
  // Column-major fill, one centroid against all others per column.
  for (Eigen::Index j = 0; j < n; ++j) {
    ops.dist2_to_point(xs.data(), ys.data(), xs.size(), xs[j], ys[j], d2.data());
    ops.expcov_from_dist2(d2.data(), c.col(j).data(), xs.size(), spec.sigma2, inv_range);
    c(j, j) = spec.sigma2;
  }
  // Exact symmetry (the kernel path is symmetric up to rounding only).
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j + 1; i < n; ++i) c(j, i) = c(i, j);
  }
  return c;
}

Eigen::MatrixXd cov_matrix(std::span<const Location> locs, const CovarianceSpec& spec) {
  std::vector<double> xs(locs.size()), ys(locs.size());
  for (std::size_t i = 0; i < locs.size(); ++i) {
    xs[i] = locs[i].x;
    ys[i] = locs[i].y;
  }
  return cov_matrix(std::span<const double>(xs), std::span<const double>(ys), spec);
}

Eigen::MatrixXd cross_cov(std::span<const Location> rows, std::span<const Location> cols,
                          const CovarianceSpec& spec) {
  std::vector<double> xs(rows.size()), ys(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    xs[i] = rows[i].x;
    ys[i] = rows[i].y;
  }
  const auto& ops = kernels::active();
  Eigen::MatrixXd c(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(cols.size()));
  std::vector<double> d2(rows.size());
  const double inv_range = 1.0 / spec.range;
  for (Eigen::Index j = 0; j < c.cols(); ++j) {
    ops.dist2_to_point(xs.data(), ys.data(), rows.size(), cols[j].x, cols[j].y, d2.data());
    ops.expcov_from_dist2(d2.data(), c.col(j).data(), rows.size(), spec.sigma2, inv_range);
  }
  return c;
}

Eigen::LLT<Eigen::MatrixXd> chol_with_jitter(Eigen::MatrixXd c, double sigma2) {
  static constexpr double kJitters[] = {0.0, 1e-10, 1e-8, 1e-6};
  double applied = 0.0;
  for (double j : kJitters) {
    c.diagonal().array() += (j - applied) * sigma2;
    applied = j;
    Eigen::LLT<Eigen::MatrixXd> llt(c);
    if (llt.info() == Eigen::Success) return llt;
  }
  throw std::runtime_error("chol_with_jitter: factorization failed after jitter escalation");
}

FieldRealization simulate_unconditional(const BauGrid& grid, const CovarianceSpec& spec,
                                        std::uint64_t seed, const std::vector<int>* subset) {
  std::vector<double> xs, ys;
  if (subset != nullptr) {
    xs.reserve(subset->size());
    ys.reserve(subset->size());
    for (int i : *subset) {
      xs.push_back(grid.centroid_xs()[i]);
      ys.push_back(grid.centroid_ys()[i]);
    }
  } else {
    xs = grid.centroid_xs();
    ys = grid.centroid_ys();
  }
  const auto llt = chol_with_jitter(
      cov_matrix(std::span<const double>(xs), std::span<const double>(ys), spec),
      spec.sigma2);
  if (subset == nullptr) return simulate_with_chol(grid, llt, seed);

  Rng rng(seed);
  Eigen::VectorXd z(static_cast<Eigen::Index>(xs.size()));
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.next_gaussian();
  const Eigen::VectorXd draw = llt.matrixL() * z;

  FieldRealization field;
  field.seed = seed;
  field.values.assign(grid.size(), 0.0);
  for (std::size_t k = 0; k < subset->size(); ++k) {
    field.values[(*subset)[k]] = draw[static_cast<Eigen::Index>(k)];
  }
  return field;
}

FieldRealization simulate_with_chol(const BauGrid& grid,
                                    const Eigen::LLT<Eigen::MatrixXd>& chol,
                                    std::uint64_t seed) {
  if (chol.matrixLLT().rows() != grid.size()) {
    throw std::invalid_argument("simulate_with_chol: factor does not match grid");
  }
  Rng rng(seed);
  Eigen::VectorXd z(grid.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.next_gaussian();
  const Eigen::VectorXd draw = chol.matrixL() * z;
  FieldRealization field;
  field.seed = seed;
  field.values.assign(draw.data(), draw.data() + draw.size());
  return field;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> ordinary_kriging(
    std::span<const Location> data_locs, const Eigen::VectorXd& data_vals,
    const CovarianceSpec& spec, std::span<const Location> targets) {
  const auto n = static_cast<Eigen::Index>(data_locs.size());
  if (n < 2) throw std::invalid_argument("ordinary_kriging: needs at least 2 data points");
  if (data_vals.size() != n) {
    throw std::invalid_argument("ordinary_kriging: values/locations length mismatch");
  }

  // Bordered system [[C, 1], [1', 0]]; symmetric indefinite, solved by LU.
  Eigen::MatrixXd sys(n + 1, n + 1);
  sys.topLeftCorner(n, n) = cov_matrix(data_locs, spec);
  sys.topRightCorner(n, 1).setOnes();
  sys.bottomLeftCorner(1, n).setOnes();
  sys(n, n) = 0.0;

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(sys);
  {
    // LU of the bordered matrix can silently produce garbage when C itself is
    // singular; detect via the residual of a probe solve.
    const Eigen::VectorXd probe = Eigen::VectorXd::Ones(n + 1);
    const Eigen::VectorXd sol = lu.solve(probe);
    if (!sol.allFinite() || (sys * sol - probe).norm() > 1e-6 * (1.0 + probe.norm())) {
      throw std::runtime_error("ordinary_kriging: singular kriging system");
    }
  }

  const Eigen::MatrixXd c0 = cross_cov(data_locs, targets, spec);  // n x m
  const auto m = static_cast<Eigen::Index>(targets.size());
  Eigen::MatrixXd rhs(n + 1, m);
  rhs.topRows(n) = c0;
  rhs.bottomRows(1).setOnes();
  const Eigen::MatrixXd sol = lu.solve(rhs);

  Eigen::VectorXd mean(m), variance(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const auto w = sol.col(j).head(n);
    const double mu = sol(n, j);  // Lagrange multiplier
    mean[j] = w.dot(data_vals);
    variance[j] = std::max(0.0, spec.sigma2 - w.dot(c0.col(j)) - mu);
  }
  return {std::move(mean), std::move(variance)};
}

FieldRealization simulate_conditional(const BauGrid& grid,
                                      std::span<const Location> data_locs,
                                      const Eigen::VectorXd& data_vals,
                                      const CovarianceSpec& spec, std::uint64_t seed,
                                      const std::vector<int>* subset) {
  std::vector<int> indices;
  if (subset != nullptr) {
    indices = *subset;
  } else {
    indices.resize(grid.size());
    for (int i = 0; i < grid.size(); ++i) indices[i] = i;
  }

  // Joint unconditional draw at data locations + target centroids.
  std::vector<Location> joint(data_locs.begin(), data_locs.end());
  joint.reserve(data_locs.size() + indices.size());
  std::vector<Location> targets;
  targets.reserve(indices.size());
  for (int i : indices) {
    targets.push_back(grid.centroid(i));
    joint.push_back(grid.centroid(i));
  }
  const auto llt = chol_with_jitter(cov_matrix(joint, spec), spec.sigma2);
  Rng rng(seed);
  Eigen::VectorXd z(static_cast<Eigen::Index>(joint.size()));
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.next_gaussian();
  const Eigen::VectorXd draw = llt.matrixL() * z;

  const auto nd = static_cast<Eigen::Index>(data_locs.size());
  const Eigen::VectorXd sim_at_data = draw.head(nd);
  const Eigen::VectorXd sim_at_targets = draw.tail(draw.size() - nd);

  const auto [krig_data, var_data] = ordinary_kriging(data_locs, data_vals, spec, targets);
  const auto [krig_sim, var_sim] = ordinary_kriging(data_locs, sim_at_data, spec, targets);

  FieldRealization field;
  field.seed = seed;
  field.values.assign(grid.size(), 0.0);
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    field.values[indices[k]] = krig_data[kk] + (sim_at_targets[kk] - krig_sim[kk]);
  }
  return field;
}

std::vector<double> areal_average(const std::vector<double>& field,
                                  const BlockPartition& blocks) {
  std::vector<double> out(blocks.blocks.size());
  for (std::size_t j = 0; j < blocks.blocks.size(); ++j) {
    const auto& members = blocks.blocks[j];
    if (members.empty()) throw std::invalid_argument("areal_average: empty block");
    double s = 0.0;
    for (int i : members) {
      if (i < 0 || i >= static_cast<int>(field.size())) {
        throw std::invalid_argument("areal_average: block index out of range");
      }
      s += field[i];
    }
    out[j] = s / static_cast<double>(members.size());
  }
  return out;
}

std::vector<double> add_noise(const std::vector<double>& values, const NoiseSpec& spec,
                              double sigma2_y, Rng rng) {
  std::vector<double> sd(values.size());
  if (spec.variance_override.has_value()) {
    if (spec.variance_override->size() != values.size()) {
      throw std::invalid_argument("add_noise: variance override length mismatch");
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double v = (*spec.variance_override)[i];
      if (!(v >= 0.0)) throw std::invalid_argument("add_noise: negative variance");
      sd[i] = std::sqrt(v);
    }
  } else {
    if (!(spec.snr > 0.0)) throw std::invalid_argument("add_noise: snr must be > 0");
    const double s = std::sqrt(sigma2_y / spec.snr);
    for (auto& v : sd) v = s;
  }
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    out[i] = values[i] + sd[i] * rng.next_gaussian();
  }
  return out;
}

}  // namespace frkd
