#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <optional>
#include <vector>

#include "frkd/basis.hpp"
#include "frkd/geometry.hpp"

namespace frkd {

enum class ObsKind { Station, Proxy, Sensor };

/// One homogeneous group of observations: values, the incidence matrix onto
/// the BAU lattice, and known per-observation error variances. Point rows
/// (stations, sensors) have a single entry equal to 1; areal rows average
/// the nested BAUs and sum to 1.
struct ObservationBlock {
  ObsKind kind = ObsKind::Station;
  Eigen::VectorXd values;
  Eigen::SparseMatrix<double, Eigen::RowMajor> incidence;  // rows x N
  Eigen::VectorXd error_var;
};

Eigen::SparseMatrix<double, Eigen::RowMajor> build_point_incidence(
    const BauGrid& grid, const std::vector<Location>& locs);

Eigen::SparseMatrix<double, Eigen::RowMajor> build_areal_incidence(
    const BlockPartition& blocks, int n_bau);

ObservationBlock make_point_block(ObsKind kind, const BauGrid& grid,
                                  const std::vector<Location>& locs,
                                  Eigen::VectorXd values, Eigen::VectorXd error_var);

ObservationBlock make_areal_block(const BlockPartition& blocks, int n_bau,
                                  Eigen::VectorXd values, Eigen::VectorXd error_var);

/// Stacked multi-source data. Blocks keep acquisition order: stations, then
/// proxies, then sensor batches; augmented sets contain the previous stack
/// as a prefix.
class ObservationSet {
 public:
  ObservationSet() = default;

  void add(ObservationBlock block);

  /// Appends a portable-sensor batch (the only kind allowed after setup).
  [[nodiscard]] ObservationSet augmented(ObservationBlock sensor_block) const;

  int total() const;
  int n_bau() const { return n_bau_; }
  bool empty() const { return blocks_.empty(); }
  const std::vector<ObservationBlock>& blocks() const { return blocks_; }

  Eigen::VectorXd stacked_values() const;
  Eigen::VectorXd stacked_error_var() const;
  Eigen::SparseMatrix<double, Eigen::RowMajor> stacked_incidence() const;

 private:
  std::vector<ObservationBlock> blocks_;
  int n_bau_ = -1;
};

/// Large-scale trend covariates per BAU (constant mean by default).
struct TrendSpec {
  Eigen::MatrixXd covariates;  // N x p

  static TrendSpec constant(int n_bau);
};

/// Basis-coefficient covariance: independent across resolutions; within a
/// resolution, variance v_m and correlation exp(-d / l_m) in the distance
/// between basis centers.
struct KParams {
  std::vector<double> variance;
  std::vector<double> length;
};

Eigen::MatrixXd build_k_matrix(const BasisSet& basis, const KParams& k);

struct ModelParams {
  Eigen::VectorXd beta;
  KParams k;
  double sigma2_xi = 0.0;
};

struct Prediction {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
};

/// Gaussian marginal log-likelihood of the stacked data under the model,
/// evaluated through the r x r capacity form (never an n x n dense solve).
double log_likelihood(const ObservationSet& obs, const BasisSet& basis,
                      const Eigen::MatrixXd& s_matrix, const TrendSpec& trend,
                      const ModelParams& params);

/// Posterior mean and variance per BAU at fixed parameters. The variance
/// depends on the observation geometry and error variances only, not on the
/// observed values. An empty observation set returns the prior surface.
Prediction condition(const ObservationSet& obs, const BasisSet& basis,
                     const Eigen::MatrixXd& s_matrix, const TrendSpec& trend,
                     const ModelParams& params);

struct EmOptions {
  double tol = 1e-6;
  int max_iter = 200;
};

struct FitResult {
  ModelParams params;
  Eigen::VectorXd eta_mean;
  Eigen::MatrixXd eta_cov;
  Prediction pred;
  double loglik = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> loglik_trace;
  ModelParams init;  // provenance: where the optimization started
};

/// Maximum-likelihood estimation of (beta, K, sigma2_xi) with measurement
/// error variances treated as known. beta is re-estimated by GLS each
/// iteration; (K, sigma2_xi) follow an EM step, so the marginal
/// log-likelihood is non-decreasing.
FitResult em_fit(const ObservationSet& obs, const BasisSet& basis,
                 const Eigen::MatrixXd& s_matrix, const TrendSpec& trend,
                 std::optional<ModelParams> init = std::nullopt,
                 const EmOptions& options = {});

/// Per-BAU posterior surface of a completed fit.
Prediction predict(const FitResult& fit, const BauGrid& grid);

}  // namespace frkd
