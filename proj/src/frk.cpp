#include "frkd/frk.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "frkd/gpsim.hpp"

namespace frkd {

namespace {

int kind_rank(ObsKind k) {
  switch (k) {
    case ObsKind::Station: return 0;
    case ObsKind::Proxy: return 1;
    case ObsKind::Sensor: return 2;
  }
  return 3;
}

void validate_block(const ObservationBlock& b) {
  const auto rows = b.incidence.rows();
  if (b.values.size() != rows || b.error_var.size() != rows) {
    throw std::invalid_argument("ObservationBlock: inconsistent dimensions");
  }
  for (Eigen::Index j = 0; j < rows; ++j) {
    if (!(b.error_var[j] > 0.0)) {
      throw std::invalid_argument("ObservationBlock: error variances must be > 0");
    }
  }
}

}  // namespace

Eigen::SparseMatrix<double, Eigen::RowMajor> build_point_incidence(
    const BauGrid& grid, const std::vector<Location>& locs) {
  Eigen::SparseMatrix<double, Eigen::RowMajor> h(
      static_cast<Eigen::Index>(locs.size()), grid.size());
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(locs.size());
  for (std::size_t j = 0; j < locs.size(); ++j) {
    entries.emplace_back(static_cast<int>(j), grid.index_of(locs[j]), 1.0);
  }
  h.setFromTriplets(entries.begin(), entries.end());
  return h;
}

Eigen::SparseMatrix<double, Eigen::RowMajor> build_areal_incidence(
    const BlockPartition& blocks, int n_bau) {
  Eigen::SparseMatrix<double, Eigen::RowMajor> h(blocks.n_blocks(), n_bau);
  std::vector<Eigen::Triplet<double>> entries;
  for (int j = 0; j < blocks.n_blocks(); ++j) {
    const auto& members = blocks.blocks[j];
    if (members.empty()) throw std::invalid_argument("build_areal_incidence: empty block");
    const double w = 1.0 / static_cast<double>(members.size());
    for (int i : members) {
      if (i < 0 || i >= n_bau) {
        throw std::invalid_argument("build_areal_incidence: BAU index out of range");
      }
      entries.emplace_back(j, i, w);
    }
  }
  h.setFromTriplets(entries.begin(), entries.end());
  return h;
}

ObservationBlock make_point_block(ObsKind kind, const BauGrid& grid,
                                  const std::vector<Location>& locs,
                                  Eigen::VectorXd values, Eigen::VectorXd error_var) {
  ObservationBlock b;
  b.kind = kind;
  b.incidence = build_point_incidence(grid, locs);
  b.values = std::move(values);
  b.error_var = std::move(error_var);
  validate_block(b);
  return b;
}

ObservationBlock make_areal_block(const BlockPartition& blocks, int n_bau,
                                  Eigen::VectorXd values, Eigen::VectorXd error_var) {
  ObservationBlock b;
  b.kind = ObsKind::Proxy;
  b.incidence = build_areal_incidence(blocks, n_bau);
  b.values = std::move(values);
  b.error_var = std::move(error_var);
  validate_block(b);
  return b;
}

void ObservationSet::add(ObservationBlock block) {
  validate_block(block);
  if (n_bau_ < 0) {
    n_bau_ = static_cast<int>(block.incidence.cols());
  } else if (block.incidence.cols() != n_bau_) {
    throw std::invalid_argument("ObservationSet: BAU count mismatch across blocks");
  }
  if (!blocks_.empty() && kind_rank(block.kind) < kind_rank(blocks_.back().kind)) {
    throw std::invalid_argument(
        "ObservationSet: blocks must stack stations, proxies, then sensors");
  }
  blocks_.push_back(std::move(block));
}

ObservationSet ObservationSet::augmented(ObservationBlock sensor_block) const {
  if (sensor_block.kind != ObsKind::Sensor) {
    throw std::invalid_argument("ObservationSet::augmented: block must be sensor kind");
  }
  ObservationSet out = *this;
  if (sensor_block.incidence.rows() == 0) return out;  // empty batch, unchanged
  out.add(std::move(sensor_block));
  return out;
}

int ObservationSet::total() const {
  int n = 0;
  for (const auto& b : blocks_) n += static_cast<int>(b.values.size());
  return n;
}

Eigen::VectorXd ObservationSet::stacked_values() const {
  Eigen::VectorXd z(total());
  Eigen::Index at = 0;
  for (const auto& b : blocks_) {
    z.segment(at, b.values.size()) = b.values;
    at += b.values.size();
  }
  return z;
}

Eigen::VectorXd ObservationSet::stacked_error_var() const {
  Eigen::VectorXd v(total());
  Eigen::Index at = 0;
  for (const auto& b : blocks_) {
    v.segment(at, b.error_var.size()) = b.error_var;
    at += b.error_var.size();
  }
  return v;
}

Eigen::SparseMatrix<double, Eigen::RowMajor> ObservationSet::stacked_incidence() const {
  Eigen::SparseMatrix<double, Eigen::RowMajor> h(total(), n_bau_ < 0 ? 0 : n_bau_);
  std::vector<Eigen::Triplet<double>> entries;
  int row0 = 0;
  for (const auto& b : blocks_) {
    for (int r = 0; r < b.incidence.outerSize(); ++r) {
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(b.incidence, r);
           it; ++it) {
        entries.emplace_back(row0 + r, static_cast<int>(it.col()), it.value());
      }
    }
    row0 += static_cast<int>(b.incidence.rows());
  }
  h.setFromTriplets(entries.begin(), entries.end());
  return h;
}

TrendSpec TrendSpec::constant(int n_bau) {
  TrendSpec t;
  t.covariates = Eigen::MatrixXd::Ones(n_bau, 1);
  return t;
}

Eigen::MatrixXd build_k_matrix(const BasisSet& basis, const KParams& k) {
  const int n_res = basis.n_resolutions();
  if (static_cast<int>(k.variance.size()) != n_res ||
      static_cast<int>(k.length.size()) != n_res) {
    throw std::invalid_argument("build_k_matrix: parameter count != resolution count");
  }
  const int r = basis.size();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(r, r);
  int offset = 0;
  for (int m = 0; m < n_res; ++m) {
    const int rm = basis.resolution_count(m);
    if (!(k.variance[m] > 0.0) || !(k.length[m] > 0.0)) {
      throw std::invalid_argument("build_k_matrix: variance and length must be > 0");
    }
    for (int a = 0; a < rm; ++a) {
      for (int b = 0; b <= a; ++b) {
        const double d = euclidean_distance(basis.functions()[offset + a].center,
                                            basis.functions()[offset + b].center);
        const double v = k.variance[m] * std::exp(-d / k.length[m]);
        out(offset + a, offset + b) = v;
        out(offset + b, offset + a) = v;
      }
    }
    offset += rm;
  }
  return out;
}

namespace {

// Everything about (obs, S, trend) that does not depend on the parameters.
struct Assembled {
  Eigen::SparseMatrix<double, Eigen::RowMajor> h;  // n x N
  Eigen::SparseMatrix<double> h_col;               // column-major copy
  Eigen::MatrixXd hh;                              // n x n = H H' (dense, n is small)
  Eigen::MatrixXd a;                               // n x r = H S
  Eigen::MatrixXd xt;                              // n x p = H X_cov
  Eigen::VectorXd err_var;                         // n
  Eigen::VectorXd z;                               // n
};

Assembled assemble(const ObservationSet& obs, const Eigen::MatrixXd& s_matrix,
                   const TrendSpec& trend) {
  if (obs.n_bau() != s_matrix.rows() || obs.n_bau() != trend.covariates.rows()) {
    throw std::invalid_argument("frk: BAU dimension mismatch between obs, basis, trend");
  }
  Assembled out;
  out.h = obs.stacked_incidence();
  out.h_col = out.h;
  out.hh = Eigen::MatrixXd(Eigen::SparseMatrix<double>(out.h * out.h.transpose()));
  out.a = out.h * s_matrix;
  out.xt = out.h * trend.covariates;
  out.err_var = obs.stacked_error_var();
  out.z = obs.stacked_values();
  return out;
}

double logdet_from_llt(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

// Parameter-dependent factorizations of Sigma = A K A' + D where
// D = sigma2_xi * H H' + diag(err_var) is the exact observation-level noise
// covariance (H H' is non-diagonal when observations overlap in a BAU).
// Solves stay in the r x r capacity form M = K^{-1} + A' D^{-1} A on top of
// one small n x n factor of D.
struct Capacity {
  Eigen::MatrixXd k;
  Eigen::LLT<Eigen::MatrixXd> k_llt;
  double logdet_k = 0.0;
  Eigen::LLT<Eigen::MatrixXd> d_llt;
  double logdet_d = 0.0;
  Eigen::MatrixXd f;  // A' D^{-1} A
  Eigen::LLT<Eigen::MatrixXd> m_llt;
  double logdet_m = 0.0;
  double sigma2_xi = 0.0;
  const Assembled* as = nullptr;

  // Sigma^{-1} x = D^{-1} x - D^{-1} A M^{-1} A' D^{-1} x
  Eigen::MatrixXd solve(const Eigen::MatrixXd& x) const {
    const Eigen::MatrixXd y0 = d_llt.solve(x);
    const Eigen::MatrixXd w = m_llt.solve(as->a.transpose() * y0);
    return y0 - d_llt.solve(as->a * w);
  }

  // Dense Sigma^{-1} (n x n); used for the per-BAU variance terms that touch
  // pairs of overlapping observations.
  Eigen::MatrixXd inverse_dense() const {
    const Eigen::Index n = as->a.rows();
    const Eigen::MatrixXd d_inv = d_llt.solve(Eigen::MatrixXd::Identity(n, n));
    const Eigen::MatrixXd b = d_llt.solve(as->a);  // D^{-1} A
    return d_inv - b * m_llt.solve(b.transpose());
  }

  double logdet_sigma() const { return logdet_d + logdet_k + logdet_m; }
};

Capacity factorize(const Assembled& as, const BasisSet& basis, const ModelParams& p) {
  if (!(p.sigma2_xi >= 0.0)) {
    throw std::invalid_argument("frk: sigma2_xi must be >= 0");
  }
  Capacity cap;
  cap.as = &as;
  cap.sigma2_xi = p.sigma2_xi;
  cap.k = build_k_matrix(basis, p.k);
  const double k_scale = cap.k.diagonal().maxCoeff();
  cap.k_llt = chol_with_jitter(cap.k, k_scale);
  cap.logdet_k = logdet_from_llt(cap.k_llt);

  const Eigen::Index n = as.a.rows();
  for (Eigen::Index j = 0; j < n; ++j) {
    if (!(as.err_var[j] > 0.0)) {
      throw std::runtime_error("frk: non-positive observation variance");
    }
  }
  Eigen::MatrixXd d = p.sigma2_xi * as.hh;
  d.diagonal() += as.err_var;
  cap.d_llt.compute(d);
  if (cap.d_llt.info() != Eigen::Success) {
    throw std::runtime_error("frk: observation covariance factorization failed");
  }
  cap.logdet_d = logdet_from_llt(cap.d_llt);

  cap.f = as.a.transpose() * cap.d_llt.solve(as.a);
  const int r = static_cast<int>(cap.k.rows());
  Eigen::MatrixXd m =
      cap.k_llt.solve(Eigen::MatrixXd::Identity(r, r)) + cap.f;
  cap.m_llt = chol_with_jitter(std::move(m), 1.0 + cap.f.diagonal().maxCoeff());
  cap.logdet_m = logdet_from_llt(cap.m_llt);
  return cap;
}

double loglik_internal(const Assembled& as, const Capacity& cap,
                       const Eigen::VectorXd& beta) {
  const Eigen::VectorXd resid = as.z - as.xt * beta;
  const Eigen::VectorXd t = cap.solve(resid);
  const double n = static_cast<double>(as.z.size());
  return -0.5 * (n * std::log(2.0 * M_PI) + cap.logdet_sigma() + resid.dot(t));
}

Eigen::VectorXd gls_beta(const Assembled& as, const Capacity& cap) {
  const Eigen::MatrixXd sx = cap.solve(as.xt);  // n x p
  const Eigen::MatrixXd gram = as.xt.transpose() * sx;
  const Eigen::VectorXd rhs = sx.transpose() * as.z;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  const Eigen::VectorXd beta = ldlt.solve(rhs);
  if (!beta.allFinite()) throw std::runtime_error("frk: GLS for beta failed");
  return beta;
}

struct FullConditioning {
  Prediction pred;
  Eigen::VectorXd eta_mean;
  Eigen::MatrixXd eta_cov;
};

FullConditioning condition_internal(const Assembled& as, const Capacity& cap,
                                    const Eigen::MatrixXd& s_matrix,
                                    const TrendSpec& trend, const Eigen::VectorXd& beta) {
  const double sxi = cap.sigma2_xi;
  const Eigen::VectorXd resid = as.z - as.xt * beta;
  const Eigen::VectorXd t = cap.solve(resid);

  FullConditioning out;
  out.eta_mean = cap.k * (as.a.transpose() * t);

  // A' Sigma^{-1} A = F - F M^{-1} F
  const Eigen::MatrixXd fs = cap.f - cap.f * cap.m_llt.solve(cap.f);
  out.eta_cov = cap.k - cap.k * fs * cap.k;

  // mean_i = x_i' beta + phi_i' eta_mean + sxi * (H' t)_i
  const Eigen::VectorXd ht = as.h.transpose() * t;
  out.pred.mean = trend.covariates * beta + s_matrix * out.eta_mean + sxi * ht;

  // var_i = phi_i' K phi_i + sxi - u_i with u_i as in the capacity expansion
  const Eigen::MatrixXd ak = as.a * cap.k;            // n x r
  const Eigen::MatrixXd wm = cap.solve(ak);           // Sigma^{-1} A K
  const Eigen::MatrixXd g = ak.transpose() * wm;      // r x r

  const Eigen::VectorXd prior =
      ((s_matrix * cap.k).cwiseProduct(s_matrix)).rowwise().sum();
  const Eigen::VectorXd term1 =
      ((s_matrix * g).cwiseProduct(s_matrix)).rowwise().sum();
  const Eigen::VectorXd term2 =
      2.0 * sxi * ((as.h.transpose() * wm).cwiseProduct(s_matrix)).rowwise().sum();

  // term3_i = sxi^2 * h_i' Sigma^{-1} h_i; h_i touches only the few
  // observations overlapping BAU i, so iterate its sparse column against the
  // dense n x n Sigma^{-1}.
  Eigen::VectorXd term3 = Eigen::VectorXd::Zero(s_matrix.rows());
  if (sxi > 0.0) {
    const Eigen::MatrixXd sigma_inv = cap.inverse_dense();
    for (int i = 0; i < as.h_col.outerSize(); ++i) {
      double acc = 0.0;
      for (Eigen::SparseMatrix<double>::InnerIterator it1(as.h_col, i); it1; ++it1) {
        for (Eigen::SparseMatrix<double>::InnerIterator it2(as.h_col, i); it2; ++it2) {
          acc += it1.value() * it2.value() * sigma_inv(it1.row(), it2.row());
        }
      }
      term3[i] = sxi * sxi * acc;
    }
  }

  out.pred.variance = (prior.array() + sxi - term1.array() - term2.array() -
                       term3.array())
                          .matrix();
  // Clamp rounding noise; anything substantially negative is a logic error.
  const double scale = prior.maxCoeff() + sxi;
  for (Eigen::Index i = 0; i < out.pred.variance.size(); ++i) {
    if (out.pred.variance[i] < -1e-6 * (1.0 + scale)) {
      throw std::runtime_error("frk: negative prediction variance");
    }
    if (out.pred.variance[i] < 0.0) out.pred.variance[i] = 0.0;
  }
  return out;
}

Prediction prior_prediction(const BasisSet& basis, const Eigen::MatrixXd& s_matrix,
                            const TrendSpec& trend, const ModelParams& p) {
  const Eigen::MatrixXd k = build_k_matrix(basis, p.k);
  Prediction pred;
  pred.variance =
      (((s_matrix * k).cwiseProduct(s_matrix)).rowwise().sum().array() + p.sigma2_xi)
          .matrix();
  if (p.beta.size() != trend.covariates.cols()) {
    throw std::invalid_argument("condition: beta dimension mismatch");
  }
  pred.mean = trend.covariates * p.beta;
  return pred;
}

double min_center_spacing(const BasisSet& basis, int resolution) {
  double best = std::numeric_limits<double>::infinity();
  const auto& funcs = basis.functions();
  for (std::size_t a = 0; a < funcs.size(); ++a) {
    if (funcs[a].resolution != resolution) continue;
    for (std::size_t b = a + 1; b < funcs.size(); ++b) {
      if (funcs[b].resolution != resolution) continue;
      const double d = euclidean_distance(funcs[a].center, funcs[b].center);
      if (d > 0.0 && d < best) best = d;
    }
  }
  if (!std::isfinite(best)) best = 1.0;  // single-function resolution
  return best;
}

double sample_variance(const Eigen::VectorXd& v) {
  if (v.size() < 2) return 1.0;
  const double mean = v.mean();
  return (v.array() - mean).square().sum() / static_cast<double>(v.size() - 1);
}

ModelParams default_init(const ObservationSet& obs, const BasisSet& basis,
                         const TrendSpec& trend) {
  // Variance from the station block when present, else from all data.
  Eigen::VectorXd ref;
  for (const auto& b : obs.blocks()) {
    if (b.kind == ObsKind::Station && b.values.size() >= 2) {
      ref = b.values;
      break;
    }
  }
  if (ref.size() == 0) ref = obs.stacked_values();
  const double var0 = std::max(sample_variance(ref), 1e-8);

  ModelParams p;
  p.beta = Eigen::VectorXd::Zero(trend.covariates.cols());
  p.k.variance.assign(basis.n_resolutions(), var0);
  p.k.length.resize(basis.n_resolutions());
  for (int m = 0; m < basis.n_resolutions(); ++m) {
    p.k.length[m] = 1.5 * min_center_spacing(basis, m);
  }
  p.sigma2_xi = 0.1 * var0;
  return p;
}

// Profile the per-resolution K objective
//   f(v, l) = r_m log v + logdet R(l) + tr(R(l)^{-1} G_m) / v
// over l (golden section in log l), with the closed-form v given l. The
// current parameter pair competes as a candidate so the EM ascent property
// is preserved even when the search bracket misses the optimum.
void update_k_params(const BasisSet& basis, const Eigen::MatrixXd& eta_second_moment,
                     KParams& k) {
  int offset = 0;
  for (int m = 0; m < basis.n_resolutions(); ++m) {
    const int rm = basis.resolution_count(m);
    const Eigen::MatrixXd g = eta_second_moment.block(offset, offset, rm, rm);
    if (rm == 1) {
      k.variance[m] = std::max(g(0, 0), 1e-12);
      offset += rm;
      continue;
    }
    Eigen::MatrixXd dist(rm, rm);
    for (int a = 0; a < rm; ++a) {
      for (int b = 0; b < rm; ++b) {
        dist(a, b) = euclidean_distance(basis.functions()[offset + a].center,
                                        basis.functions()[offset + b].center);
      }
    }
    const auto objective_parts = [&](double length) -> std::pair<double, double> {
      const Eigen::MatrixXd r_mat = (-dist / length).array().exp().matrix();
      const auto llt = chol_with_jitter(r_mat, 1.0);
      const double logdet = logdet_from_llt(llt);
      const double trace = llt.solve(g).trace();
      return {logdet, std::max(trace, 1e-300)};
    };
    const auto profile = [&](double length) {
      const auto [logdet, trace] = objective_parts(length);
      const double v = std::max(trace / rm, 1e-12);
      return std::make_pair(rm * std::log(v) + logdet + trace / v, v);
    };

    // Golden-section search on log(length).
    const double cur_len = k.length[m];
    double lo = std::log(cur_len) - std::log(8.0);
    double hi = std::log(cur_len) + std::log(8.0);
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
    double f1 = profile(std::exp(x1)).first, f2 = profile(std::exp(x2)).first;
    for (int it = 0; it < 40; ++it) {
      if (f1 < f2) {
        hi = x2; x2 = x1; f2 = f1;
        x1 = hi - gr * (hi - lo);
        f1 = profile(std::exp(x1)).first;
      } else {
        lo = x1; x1 = x2; f1 = f2;
        x2 = lo + gr * (hi - lo);
        f2 = profile(std::exp(x2)).first;
      }
    }
    const double best_len = std::exp(f1 < f2 ? x1 : x2);
    const auto [best_obj, best_var] = profile(best_len);

    // Keep the current pair if the search did not improve on it.
    const auto [cur_logdet, cur_trace] = objective_parts(cur_len);
    const double cur_obj =
        rm * std::log(k.variance[m]) + cur_logdet + cur_trace / k.variance[m];
    if (best_obj < cur_obj) {
      k.length[m] = best_len;
      k.variance[m] = best_var;
    }
    offset += rm;
  }
}

}  // namespace

double log_likelihood(const ObservationSet& obs, const BasisSet& basis,
                      const Eigen::MatrixXd& s_matrix, const TrendSpec& trend,
                      const ModelParams& params) {
  if (obs.total() < 1) throw std::invalid_argument("log_likelihood: no observations");
  const Assembled as = assemble(obs, s_matrix, trend);
  const Capacity cap = factorize(as, basis, params);
  if (params.beta.size() != trend.covariates.cols()) {
    throw std::invalid_argument("log_likelihood: beta dimension mismatch");
  }
  return loglik_internal(as, cap, params.beta);
}

Prediction condition(const ObservationSet& obs, const BasisSet& basis,
                     const Eigen::MatrixXd& s_matrix, const TrendSpec& trend,
                     const ModelParams& params) {
  if (obs.empty() || obs.total() == 0) {
    return prior_prediction(basis, s_matrix, trend, params);
  }
  const Assembled as = assemble(obs, s_matrix, trend);
  const Capacity cap = factorize(as, basis, params);
  return condition_internal(as, cap, s_matrix, trend, params.beta).pred;
}

FitResult em_fit(const ObservationSet& obs, const BasisSet& basis,
                 const Eigen::MatrixXd& s_matrix, const TrendSpec& trend,
                 std::optional<ModelParams> init, const EmOptions& options) {
  const int p = static_cast<int>(trend.covariates.cols());
  if (obs.total() < p + 1) {
    throw std::invalid_argument("em_fit: needs at least p + 1 observations");
  }
  {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(trend.covariates);
    if (qr.rank() < p) {
      throw std::invalid_argument("em_fit: trend covariates are rank deficient");
    }
  }

  const Assembled as = assemble(obs, s_matrix, trend);
  ModelParams params = init.has_value() ? *init : default_init(obs, basis, trend);
  if (params.beta.size() == 0) params.beta = Eigen::VectorXd::Zero(p);
  const ModelParams initial = params;
  const double xi_floor = 1e-10 * std::max(sample_variance(as.z), 1e-8);
  params.sigma2_xi = std::max(params.sigma2_xi, xi_floor);

  Capacity cap = factorize(as, basis, params);
  params.beta = gls_beta(as, cap);
  double ll = loglik_internal(as, cap, params.beta);

  FitResult fit;
  fit.init = initial;
  fit.loglik_trace.push_back(ll);

  bool converged = false;
  int iter = 0;
  const Eigen::Index n = as.z.size();
  while (iter < options.max_iter) {
    ++iter;
    // E-step at the current parameters.
    const Eigen::VectorXd resid = as.z - as.xt * params.beta;
    const Eigen::VectorXd t = cap.solve(resid);
    const Eigen::VectorXd eta_mean = cap.k * (as.a.transpose() * t);
    const Eigen::MatrixXd fs = cap.f - cap.f * cap.m_llt.solve(cap.f);
    const Eigen::MatrixXd eta_cov = cap.k - cap.k * fs * cap.k;
    const Eigen::MatrixXd eta_mom = eta_cov + eta_mean * eta_mean.transpose();

    const Eigen::VectorXd sig_inv_diag = cap.sigma_inv_diag();

    // M-step: fine-scale variance, then K, then beta (exact GLS).
    double xi_acc = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double sw = params.sigma2_xi * as.fine_w[j];
      const double mean_j = sw * t[j];
      const double var_j = sw - sw * sw * sig_inv_diag[j];
      xi_acc += (mean_j * mean_j + var_j) / as.fine_w[j];
    }
    params.sigma2_xi = std::max(xi_acc / static_cast<double>(n), xi_floor);
    update_k_params(basis, eta_mom, params.k);

    cap = factorize(as, basis, params);
    params.beta = gls_beta(as, cap);
    const double ll_new = loglik_internal(as, cap, params.beta);
    fit.loglik_trace.push_back(ll_new);

    if (std::abs(ll_new - ll) <= options.tol * (1.0 + std::abs(ll_new))) {
      ll = ll_new;
      converged = true;
      break;
    }
    ll = ll_new;
  }

  FullConditioning fc = condition_internal(as, cap, s_matrix, trend, params.beta);
  fit.params = std::move(params);
  fit.eta_mean = std::move(fc.eta_mean);
  fit.eta_cov = std::move(fc.eta_cov);
  fit.pred = std::move(fc.pred);
  fit.loglik = ll;
  fit.iterations = iter;
  fit.converged = converged;
  return fit;
}

Prediction predict(const FitResult& fit, const BauGrid& grid) {
  if (fit.pred.mean.size() != grid.size()) {
    throw std::invalid_argument("predict: fit does not match grid size");
  }
  return fit.pred;
}

}  // namespace frkd
