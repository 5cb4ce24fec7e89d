#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "frkd/geometry.hpp"
#include "frkd/rng.hpp"

namespace frkd {

/// Isotropic exponential covariance C(h) = sigma2 * exp(-|h| / range).
struct CovarianceSpec {
  double sigma2 = 1.0;
  double range = 1.0;

  CovarianceSpec() = default;
  CovarianceSpec(double sigma2_in, double range_in);
};

Eigen::MatrixXd cov_matrix(std::span<const Location> locs, const CovarianceSpec& spec);
Eigen::MatrixXd cov_matrix(std::span<const double> xs, std::span<const double> ys,
                           const CovarianceSpec& spec);

/// Cross-covariance between two location sets (rows x cols).
Eigen::MatrixXd cross_cov(std::span<const Location> rows, std::span<const Location> cols,
                          const CovarianceSpec& spec);

/// Cholesky with diagonal jitter escalation 1e-10 -> 1e-8 -> 1e-6 (relative
/// to sigma2). Throws std::runtime_error if the matrix still fails.
Eigen::LLT<Eigen::MatrixXd> chol_with_jitter(Eigen::MatrixXd c, double sigma2);

/// One field draw over the BAU lattice. `values` is index-aligned with the
/// grid; when simulation was restricted to a subset, entries outside the
/// subset are zero-filled and carry no meaning.
struct FieldRealization {
  std::vector<double> values;
  std::uint64_t seed = 0;
};

/// Zero-mean draw at BAU centroids with the exponential covariance. When
/// `subset` is given, only those BAU indices are simulated.
FieldRealization simulate_unconditional(const BauGrid& grid, const CovarianceSpec& spec,
                                        std::uint64_t seed,
                                        const std::vector<int>* subset = nullptr);

/// Draw reusing a precomputed factor of the full-grid covariance; identical
/// output to simulate_unconditional for the same seed.
FieldRealization simulate_with_chol(const BauGrid& grid,
                                    const Eigen::LLT<Eigen::MatrixXd>& chol,
                                    std::uint64_t seed);

/// Ordinary kriging (constant unknown mean, fixed covariance). Returns the
/// BLUP mean and kriging variance at each target.
std::pair<Eigen::VectorXd, Eigen::VectorXd> ordinary_kriging(
    std::span<const Location> data_locs, const Eigen::VectorXd& data_vals,
    const CovarianceSpec& spec, std::span<const Location> targets);

/// Conditional Gaussian draw: kriging mean plus the kriging residual of an
/// unconditional draw, so the field honors the data at the data locations.
FieldRealization simulate_conditional(const BauGrid& grid,
                                      std::span<const Location> data_locs,
                                      const Eigen::VectorXd& data_vals,
                                      const CovarianceSpec& spec, std::uint64_t seed,
                                      const std::vector<int>* subset = nullptr);

/// Entry j = mean of the field over the BAUs of block j.
std::vector<double> areal_average(const std::vector<double>& field,
                                  const BlockPartition& blocks);

/// Measurement-noise model: variance sigma2_Y / snr per entry, or an
/// explicit per-entry variance override.
struct NoiseSpec {
  double snr = 1.0;
  std::optional<std::vector<double>> variance_override;
};

/// values + independent zero-mean Gaussian noise.
std::vector<double> add_noise(const std::vector<double>& values, const NoiseSpec& spec,
                              double sigma2_y, Rng rng);

}  // namespace frkd
