#include "oracles.hpp"

#include <cmath>
#include <stdexcept>

namespace oracles {

DenseConditioning dense_conditioning(const Eigen::MatrixXd& h_dense,
                                     const Eigen::MatrixXd& s_matrix,
                                     const Eigen::MatrixXd& k, double sigma2_xi,
                                     const Eigen::VectorXd& noise_var,
                                     const Eigen::MatrixXd& x_cov,
                                     const Eigen::VectorXd& z) {
  const Eigen::MatrixXd a = h_dense * s_matrix;
  Eigen::VectorXd w(h_dense.rows());
  for (Eigen::Index j = 0; j < h_dense.rows(); ++j) {
    w[j] = h_dense.row(j).squaredNorm();
  }
  Eigen::MatrixXd sigma = a * k * a.transpose();
  sigma.diagonal() += (sigma2_xi * w + noise_var);

  const Eigen::MatrixXd xt = h_dense * x_cov;
  const Eigen::LDLT<Eigen::MatrixXd> sig(sigma);
  if (sig.info() != Eigen::Success) {
    throw std::runtime_error("oracle: observation covariance not factorizable");
  }

  DenseConditioning out;
  const Eigen::MatrixXd six = sig.solve(xt);
  out.beta = (xt.transpose() * six).ldlt().solve(six.transpose() * z);

  const Eigen::VectorXd resid = z - xt * out.beta;
  const Eigen::MatrixXd cross =
      s_matrix * k * a.transpose() + sigma2_xi * h_dense.transpose();
  const Eigen::VectorXd si_resid = sig.solve(resid);
  out.mean = x_cov * out.beta + cross * si_resid;

  const Eigen::MatrixXd si_cross = sig.solve(cross.transpose());  // n x N
  const Eigen::VectorXd prior =
      ((s_matrix * k).cwiseProduct(s_matrix)).rowwise().sum();
  out.variance.resize(s_matrix.rows());
  for (Eigen::Index i = 0; i < s_matrix.rows(); ++i) {
    out.variance[i] = prior[i] + sigma2_xi - cross.row(i).dot(si_cross.col(i));
  }
  return out;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> ordinary_kriging_gls(
    const std::vector<frkd::Location>& data_locs, const Eigen::VectorXd& data_vals,
    const frkd::CovarianceSpec& spec, const std::vector<frkd::Location>& targets) {
  const auto n = static_cast<Eigen::Index>(data_locs.size());
  Eigen::MatrixXd c(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      c(i, j) = spec.sigma2 *
                std::exp(-frkd::euclidean_distance(data_locs[i], data_locs[j]) / spec.range);
    }
  }
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(c);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  const Eigen::VectorXd ci_ones = lu.solve(ones);
  const Eigen::VectorXd ci_z = lu.solve(data_vals);
  const double denom = ones.dot(ci_ones);
  const double beta = ones.dot(ci_z) / denom;

  Eigen::VectorXd mean(targets.size()), variance(targets.size());
  for (std::size_t t = 0; t < targets.size(); ++t) {
    Eigen::VectorXd c0(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      c0[i] = spec.sigma2 *
              std::exp(-frkd::euclidean_distance(data_locs[i], targets[t]) / spec.range);
    }
    const Eigen::VectorXd ci_c0 = lu.solve(c0);
    const double m = beta + c0.dot(ci_z - beta * ci_ones);
    const double lagrange = 1.0 - ones.dot(ci_c0);
    const double v = spec.sigma2 - c0.dot(ci_c0) + lagrange * lagrange / denom;
    mean[static_cast<Eigen::Index>(t)] = m;
    variance[static_cast<Eigen::Index>(t)] = v;
  }
  return {std::move(mean), std::move(variance)};
}

double crps_quadrature(double mean, double sd, double y) {
  if (sd == 0.0) return std::fabs(y - mean);
  const double lo = std::min(mean - 12.0 * sd, y - 1.0);
  const double hi = std::max(mean + 12.0 * sd, y + 1.0);
  const int n = 40000;  // even
  const double h = (hi - lo) / n;
  const auto f = [&](double x) {
    const double cdf = 0.5 * std::erfc(-(x - mean) / (sd * std::sqrt(2.0)));
    const double step = x >= y ? 1.0 : 0.0;
    const double d = cdf - step;
    return d * d;
  };
  double acc = f(lo) + f(hi);
  for (int i = 1; i < n; ++i) acc += f(lo + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

namespace {

void enumerate(const Eigen::VectorXd& utility, const std::vector<int>& candidates,
               int batch, double min_spacing, const frkd::BauGrid& grid,
               std::size_t start, std::vector<int>& current, double total, double& best) {
  if (total > best) best = total;
  if (static_cast<int>(current.size()) == batch) return;
  for (std::size_t k = start; k < candidates.size(); ++k) {
    const int c = candidates[k];
    bool ok = true;
    for (int s : current) {
      if (frkd::euclidean_distance(grid.centroid(c), grid.centroid(s)) < min_spacing) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    current.push_back(c);
    enumerate(utility, candidates, batch, min_spacing, grid, k + 1, current,
              total + utility[c], best);
    current.pop_back();
  }
}

}  // namespace

double brute_force_best_utility(const Eigen::VectorXd& utility,
                                const std::vector<int>& candidates, int batch,
                                double min_spacing, const frkd::BauGrid& grid) {
  std::vector<int> current;
  double best = 0.0;
  enumerate(utility, candidates, batch, min_spacing, grid, 0, current, 0.0, best);
  return best;
}

}  // namespace oracles
