// One-off generator for the masked-domain experiment fixtures under
// data/osse/. The outputs are versioned; regenerate only when the layout
// itself must change.
//
// Geometry: a 108 x 84 km domain on a 1 km lattice, an irregular two-lobe
// inclusion mask sized so exactly 51 of the 12 x 12 km proxy blocks contain
// active cells, 7 monitoring stations clustered in the west lobe, two risk
// rasters (high-risk patches, highway buffer), and per-block noise SDs.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <vector>

#include "frkd/csv.hpp"
#include "frkd/geometry.hpp"
#include "frkd/gpsim.hpp"
#include "frkd/rng.hpp"

using namespace frkd;

namespace {

constexpr int kNx = 108;
constexpr int kNy = 84;
constexpr int kCoarseNx = 9;
constexpr int kCoarseNy = 7;
constexpr int kWantBlocks = 51;
constexpr double kBufferKm = 2.0;
constexpr double kMinSpacingKm = 3.0;

struct Ellipse {
  double cx, cy, rx, ry;
  bool contains(double x, double y, double scale) const {
    const double u = (x - cx) / (rx * scale);
    const double v = (y - cy) / (ry * scale);
    return u * u + v * v <= 1.0;
  }
};

const Ellipse kLobeWest{34.0, 44.0, 30.0, 36.0};
const Ellipse kLobeEast{72.0, 40.0, 34.0, 27.0};

std::vector<std::uint8_t> build_mask(const BauGrid& grid, double scale) {
  std::vector<std::uint8_t> mask(grid.size(), 0);
  for (int i = 0; i < grid.size(); ++i) {
    const Location c = grid.centroid(i);
    if (kLobeWest.contains(c.x, c.y, scale) || kLobeEast.contains(c.x, c.y, scale)) {
      mask[i] = 1;
    }
  }
  return mask;
}

double segment_distance(double px, double py, double ax, double ay, double bx, double by) {
  const double vx = bx - ax, vy = by - ay;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0.0 ? ((px - ax) * vx + (py - ay) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(px - (ax + t * vx), py - (ay + t * vy));
}

}  // namespace

int main() {
  const Domain domain(0.0, static_cast<double>(kNx), 0.0, static_cast<double>(kNy));
  const BauGrid grid(domain, kNx, kNy);

  // Scale the lobes until exactly kWantBlocks proxy blocks are non-empty.
  double chosen_scale = -1.0;
  for (double scale = 0.70; scale <= 1.10; scale += 0.001) {
    const auto mask = build_mask(grid, scale);
    const BlockPartition blocks = nest_blocks(grid, kCoarseNx, kCoarseNy, mask);
    if (blocks.n_blocks() == kWantBlocks) {
      chosen_scale = scale;
      break;
    }
  }
  if (chosen_scale < 0.0) {
    std::cerr << "no lobe scale yields " << kWantBlocks << " blocks\n";
    return 1;
  }
  const auto mask = build_mask(grid, chosen_scale);
  const BlockPartition blocks = nest_blocks(grid, kCoarseNx, kCoarseNy, mask);
  std::vector<int> active;
  for (int i = 0; i < grid.size(); ++i) {
    if (mask[i]) active.push_back(i);
  }
  std::cout << "scale " << chosen_scale << ": " << blocks.n_blocks() << " blocks, "
            << active.size() << " active BAUs\n";

  // Stations: a tight cluster in the west lobe (mimics an urban network).
  const std::vector<Location> stations = {{26.5, 43.5}, {29.5, 46.5}, {31.5, 41.5},
                                          {34.5, 44.5}, {36.5, 48.5}, {33.5, 38.5},
                                          {28.5, 39.5}};
  for (const auto& s : stations) {
    if (!mask[grid.index_of(s)]) {
      std::cerr << "station (" << s.x << ", " << s.y << ") is outside the mask\n";
      return 1;
    }
  }

  // Proxy point values at the geometric centroids of the non-empty coarse
  // cells: a seeded Gaussian-process draw standardized to a PM2.5-like level.
  const double bw = domain.width() / kCoarseNx;
  const double bh = domain.height() / kCoarseNy;
  std::vector<Location> block_centroids;
  {
    const BlockPartition full = nest_blocks(grid, kCoarseNx, kCoarseNy);
    int coarse_index = 0;
    for (int by = 0; by < kCoarseNy; ++by) {
      for (int bx = 0; bx < kCoarseNx; ++bx, ++coarse_index) {
        bool any = false;
        for (int i : full.blocks[coarse_index]) {
          if (mask[i]) {
            any = true;
            break;
          }
        }
        if (any) {
          block_centroids.push_back({domain.xmin + (bx + 0.5) * bw,
                                     domain.ymin + (by + 0.5) * bh});
        }
      }
    }
  }
  if (static_cast<int>(block_centroids.size()) != blocks.n_blocks()) {
    std::cerr << "centroid bookkeeping mismatch\n";
    return 1;
  }

  const CovarianceSpec cov(0.76, 35.8);
  std::vector<double> cmaq_values(block_centroids.size());
  {
    const auto llt = chol_with_jitter(cov_matrix(block_centroids, cov), cov.sigma2);
    Rng rng(20260809);
    Eigen::VectorXd z(static_cast<Eigen::Index>(block_centroids.size()));
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.next_gaussian();
    Eigen::VectorXd draw = llt.matrixL() * z;
    const double mean = draw.mean();
    const double sd = std::sqrt((draw.array() - mean).square().sum() / (draw.size() - 1));
    for (Eigen::Index i = 0; i < draw.size(); ++i) {
      cmaq_values[i] = 5.42 + 1.46 * (draw[i] - mean) / sd;
    }
  }

  // Per-block noise SDs in [0.3, 0.8].
  std::vector<double> block_sds(blocks.n_blocks());
  {
    Rng rng(914);
    for (auto& sd : block_sds) sd = 0.3 + 0.5 * rng.next_double();
  }

  // Risk raster 1: three high-risk patches.
  const double patches[][4] = {
      // xmin, xmax, ymin, ymax
      {40.0, 66.0, 28.0, 56.0},
      {16.0, 36.0, 16.0, 36.0},
      {66.0, 96.0, 36.0, 60.0},
  };
  std::vector<double> risk1(grid.size(), 0.0);
  for (int i : active) {
    const Location c = grid.centroid(i);
    for (const auto& p : patches) {
      if (c.x >= p[0] && c.x <= p[1] && c.y >= p[2] && c.y <= p[3]) {
        risk1[i] = 1.0;
        break;
      }
    }
  }

  // Risk raster 2: 2 km buffer around two highways.
  const double highways[][4] = {
      // ax, ay, bx, by
      {12.0, 22.0, 102.0, 62.0},
      {58.0, 6.0, 66.0, 80.0},
  };
  std::vector<double> risk2(grid.size(), 0.0);
  for (int i : active) {
    const Location c = grid.centroid(i);
    for (const auto& h : highways) {
      if (segment_distance(c.x, c.y, h[0], h[1], h[2], h[3]) <= kBufferKm) {
        risk2[i] = 1.0;
        break;
      }
    }
  }

  // The sampling experiment needs at least 20 feasible sites in the joint
  // risk region at 3 km spacing; verify with a greedy packing.
  {
    std::vector<int> risk_baus;
    for (int i : active) {
      if (risk1[i] > 0.0 && risk2[i] > 0.0) risk_baus.push_back(i);
    }
    std::vector<Location> packed;
    for (int i : risk_baus) {
      const Location c = grid.centroid(i);
      bool ok = true;
      for (const auto& p : packed) {
        if (euclidean_distance(c, p) < kMinSpacingKm) {
          ok = false;
          break;
        }
      }
      if (ok) packed.push_back(c);
    }
    std::cout << "joint risk region: " << risk_baus.size() << " BAUs, greedy packing "
              << packed.size() << " sites at " << kMinSpacingKm << " km\n";
    if (packed.size() < 26) {
      std::cerr << "risk region too small for a robust 20-sensor design\n";
      return 1;
    }
  }

  namespace fs = std::filesystem;
  fs::create_directories("data/osse");

  {
    std::vector<std::vector<std::string>> rows;
    for (int i : active) rows.push_back({std::to_string(i), "1"});
    write_csv("data/osse/mask.csv", {"bau_index", "value"}, rows);
  }
  {
    std::vector<std::vector<std::string>> rows;
    for (const auto& s : stations) {
      rows.push_back({format_number(s.x), format_number(s.y)});
    }
    write_csv("data/osse/stations.csv", {"x", "y"}, rows);
  }
  {
    std::vector<std::vector<std::string>> rows;
    for (std::size_t j = 0; j < block_centroids.size(); ++j) {
      rows.push_back({format_number(block_centroids[j].x),
                      format_number(block_centroids[j].y),
                      format_number(cmaq_values[j])});
    }
    write_csv("data/osse/cmaq_points.csv", {"x", "y", "value"}, rows);
  }
  write_block_values("data/osse/block_sds.csv", block_sds, "sd");
  {
    std::vector<std::vector<std::string>> rows;
    for (int i : active) {
      if (risk1[i] > 0.0) rows.push_back({std::to_string(i), "1"});
    }
    write_csv("data/osse/risk_elderly.csv", {"bau_index", "value"}, rows);
    rows.clear();
    for (int i : active) {
      if (risk2[i] > 0.0) rows.push_back({std::to_string(i), "1"});
    }
    write_csv("data/osse/risk_highway.csv", {"bau_index", "value"}, rows);
  }
  std::cout << "fixtures written to data/osse/\n";
  return 0;
}
