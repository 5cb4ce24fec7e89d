#pragma once

#include <cstdint>
#include <vector>

namespace frkd {

struct Location {
  double x = 0.0;
  double y = 0.0;
};

double euclidean_distance(const Location& a, const Location& b);

/// Axis-aligned rectangular study domain.
struct Domain {
  double xmin, xmax, ymin, ymax;

  Domain(double xmin, double xmax, double ymin, double ymax);

  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
  double area() const { return width() * height(); }
  bool contains(const Location& s) const {
    return s.x >= xmin && s.x <= xmax && s.y >= ymin && s.y <= ymax;
  }
};

/// Regular lattice of equal-area cells partitioning the domain. Cells are
/// indexed row-major with x varying fastest: index = iy * nx + ix. The
/// ordering is part of the file-format contract and must not change.
class BauGrid {
 public:
  BauGrid(const Domain& domain, int nx, int ny);

  const Domain& domain() const { return domain_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int size() const { return nx_ * ny_; }
  double cell_width() const { return cell_w_; }
  double cell_height() const { return cell_h_; }
  double cell_area() const { return cell_w_ * cell_h_; }

  Location centroid(int index) const;

  /// Index of the cell containing s. Points on interior cell edges resolve
  /// to the lower-index neighbor; the domain boundary belongs to the
  /// adjacent cells. Throws std::domain_error for locations outside.
  int index_of(const Location& s) const;

  int index_at(int ix, int iy) const { return iy * nx_ + ix; }

  /// Centroid coordinates as flat arrays (index-aligned), for kernel calls.
  const std::vector<double>& centroid_xs() const { return xs_; }
  const std::vector<double>& centroid_ys() const { return ys_; }

 private:
  Domain domain_;
  int nx_, ny_;
  double cell_w_, cell_h_;
  std::vector<double> xs_, ys_;
};

/// Disjoint groups of BAU indices (one group per coarse cell). Every BAU
/// appears in at most one block; blocks are non-empty.
struct BlockPartition {
  std::vector<std::vector<int>> blocks;

  int n_blocks() const { return static_cast<int>(blocks.size()); }
};

/// Partition the grid into coarse_nx x coarse_ny blocks of whole BAUs.
/// Requires exact nesting (nx % coarse_nx == 0 and ny % coarse_ny == 0).
BlockPartition nest_blocks(const BauGrid& grid, int coarse_nx, int coarse_ny);

/// Masked variant: each block keeps only BAUs with mask != 0; blocks left
/// empty are dropped. Used for irregular study regions represented as a
/// rectangular grid plus an inclusion mask.
BlockPartition nest_blocks(const BauGrid& grid, int coarse_nx, int coarse_ny,
                           const std::vector<std::uint8_t>& mask);

/// Per-BAU risk raster T and its utility weight lambda.
struct RiskField {
  std::vector<double> values;
  double lambda = 0.0;
};

/// T_i = r1_i * r2_i from two binary indicator rasters.
RiskField make_risk_field(const BauGrid& grid, const std::vector<double>& r1,
                          const std::vector<double>& r2, double lambda);

}  // namespace frkd
