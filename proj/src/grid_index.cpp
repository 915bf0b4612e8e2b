#include "treelink/grid_index.hpp"

#include <algorithm>
#include <cmath>

#include "treelink/errors.hpp"

namespace treelink {

GridIndex::GridIndex(const Domain& extent, double cell_size)
    : extent_(extent), cell_size_(cell_size) {
  extent.validate();
  if (!(cell_size > 0.0)) {
    throw Error(ErrorCode::ValidationError, "grid cell_size must be positive");
  }
  nx_ = std::max(1, static_cast<int>(std::ceil(extent.width() / cell_size_)));
  ny_ = std::max(1, static_cast<int>(std::ceil(extent.height() / cell_size_)));
  cells_.resize(static_cast<std::size_t>(nx_) * ny_);
}

int GridIndex::cell_x(double x) const {
  const int c = static_cast<int>(std::floor((x - extent_.xmin) / cell_size_));
  return std::clamp(c, 0, nx_ - 1);
}

int GridIndex::cell_y(double y) const {
  const int c = static_cast<int>(std::floor((y - extent_.ymin) / cell_size_));
  return std::clamp(c, 0, ny_ - 1);
}

void GridIndex::rebuild(std::span<const Point2> points) {
  for (auto& cell : cells_) cell.clear();
  points_.assign(points.begin(), points.end());
  for (int i = 0; i < static_cast<int>(points_.size()); ++i) {
    const auto& p = points_[i];
    cells_[static_cast<std::size_t>(cell_y(p.y)) * nx_ + cell_x(p.x)].push_back(i);
  }
}

std::vector<int> GridIndex::query_box(Point2 center, double half_width) const {
  if (!(half_width > 0.0)) {
    throw Error(ErrorCode::ValidationError, "query_box requires half_width > 0");
  }
  std::vector<int> result;
  const int x0 = cell_x(center.x - half_width);
  const int x1 = cell_x(center.x + half_width);
  const int y0 = cell_y(center.y - half_width);
  const int y1 = cell_y(center.y + half_width);
  for (int cy = y0; cy <= y1; ++cy) {
    for (int cx = x0; cx <= x1; ++cx) {
      for (int id : cells_[static_cast<std::size_t>(cy) * nx_ + cx]) {
        const Point2 p = points_[static_cast<std::size_t>(id)];
        if (std::abs(p.x - center.x) <= half_width &&
            std::abs(p.y - center.y) <= half_width) {
          result.push_back(id);
        }
      }
    }
  }
  std::sort(result.begin(), result.end());
  return result;
}

}  // namespace treelink
