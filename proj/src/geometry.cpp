#include "frkd/geometry.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace frkd {

double euclidean_distance(const Location& a, const Location& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

Domain::Domain(double xmin_in, double xmax_in, double ymin_in, double ymax_in)
    : xmin(xmin_in), xmax(xmax_in), ymin(ymin_in), ymax(ymax_in) {
  if (!(xmax > xmin) || !(ymax > ymin)) {
    throw std::invalid_argument("Domain: requires xmax > xmin and ymax > ymin");
  }
}

BauGrid::BauGrid(const Domain& domain, int nx, int ny)
    : domain_(domain), nx_(nx), ny_(ny) {
  if (nx < 1 || ny < 1) {
    throw std::invalid_argument("BauGrid: cell counts must be positive");
  }
  cell_w_ = domain_.width() / nx_;
  cell_h_ = domain_.height() / ny_;
  const int n = nx_ * ny_;
  xs_.resize(n);
  ys_.resize(n);
  for (int iy = 0; iy < ny_; ++iy) {
    for (int ix = 0; ix < nx_; ++ix) {
      const int i = iy * nx_ + ix;
      xs_[i] = domain_.xmin + (ix + 0.5) * cell_w_;
      ys_[i] = domain_.ymin + (iy + 0.5) * cell_h_;
    }
  }
}

Location BauGrid::centroid(int index) const {
  return {xs_[index], ys_[index]};
}

namespace {

// Axis index with the lower-edge tie rule: interior edges belong to the
// lower-index cell; the two domain boundaries belong to the end cells.
int axis_index(double coord, double origin, double cell, int count) {
  const double offset = coord - origin;
  int idx = static_cast<int>(std::floor(offset / cell));
  if (idx >= count) idx = count - 1;
  if (idx > 0 && offset <= idx * cell) --idx;
  return idx;
}

}  // namespace

int BauGrid::index_of(const Location& s) const {
  if (!domain_.contains(s)) {
    throw std::domain_error("BauGrid::index_of: location outside domain (" +
                            std::to_string(s.x) + ", " + std::to_string(s.y) + ")");
  }
  const int ix = axis_index(s.x, domain_.xmin, cell_w_, nx_);
  const int iy = axis_index(s.y, domain_.ymin, cell_h_, ny_);
  return index_at(ix, iy);
}

BlockPartition nest_blocks(const BauGrid& grid, int coarse_nx, int coarse_ny) {
  if (coarse_nx < 1 || coarse_ny < 1 || grid.nx() % coarse_nx != 0 ||
      grid.ny() % coarse_ny != 0) {
    throw std::invalid_argument("nest_blocks: coarse grid must nest exactly");
  }
  const int rx = grid.nx() / coarse_nx;
  const int ry = grid.ny() / coarse_ny;
  BlockPartition part;
  part.blocks.reserve(static_cast<std::size_t>(coarse_nx) * coarse_ny);
  for (int by = 0; by < coarse_ny; ++by) {
    for (int bx = 0; bx < coarse_nx; ++bx) {
      std::vector<int> members;
      members.reserve(static_cast<std::size_t>(rx) * ry);
      for (int iy = by * ry; iy < (by + 1) * ry; ++iy) {
        for (int ix = bx * rx; ix < (bx + 1) * rx; ++ix) {
          members.push_back(grid.index_at(ix, iy));
        }
      }
      part.blocks.push_back(std::move(members));
    }
  }
  return part;
}

BlockPartition nest_blocks(const BauGrid& grid, int coarse_nx, int coarse_ny,
                           const std::vector<std::uint8_t>& mask) {
  if (static_cast<int>(mask.size()) != grid.size()) {
    throw std::invalid_argument("nest_blocks: mask length must equal grid size");
  }
  BlockPartition full = nest_blocks(grid, coarse_nx, coarse_ny);
  BlockPartition part;
  for (auto& block : full.blocks) {
    std::vector<int> members;
    for (int i : block) {
      if (mask[i] != 0) members.push_back(i);
    }
    if (!members.empty()) part.blocks.push_back(std::move(members));
  }
  return part;
}

RiskField make_risk_field(const BauGrid& grid, const std::vector<double>& r1,
                          const std::vector<double>& r2, double lambda) {
  const std::size_t n = static_cast<std::size_t>(grid.size());
  if (r1.size() != n || r2.size() != n) {
    throw std::invalid_argument("make_risk_field: indicator length mismatch");
  }
  if (lambda < 0.0 || !std::isfinite(lambda)) {
    throw std::invalid_argument("make_risk_field: lambda must be finite and >= 0");
  }
  RiskField field;
  field.lambda = lambda;
  field.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if ((r1[i] != 0.0 && r1[i] != 1.0) || (r2[i] != 0.0 && r2[i] != 1.0)) {
      throw std::invalid_argument("make_risk_field: indicators must be 0/1");
    }
    field.values[i] = r1[i] * r2[i];
  }
  return field;
}

}  // namespace frkd
