#pragma once

#include <span>
#include <vector>

#include "treelink/geometry.hpp"

namespace treelink {

// Uniform grid over a fixed extent supporting axis-aligned box queries.
// Point identifiers are their positions in the span passed to rebuild().
// Points outside the extent are kept in the boundary cells, so queries still
// find them by the exact coordinate predicate.
//
// Rebuilds are single-writer; concurrent read-only queries are safe.
class GridIndex {
 public:
  // cell_size is normally the query box half-width, so a query touches at
  // most 9 cells.
  GridIndex(const Domain& extent, double cell_size);

  void rebuild(std::span<const Point2> points);

  // Identifiers of points p with |p.x - center.x| <= half_width and
  // |p.y - center.y| <= half_width, ascending.
  std::vector<int> query_box(Point2 center, double half_width) const;

  double cell_size() const { return cell_size_; }
  const Domain& extent() const { return extent_; }
  std::size_t size() const { return points_.size(); }

 private:
  int cell_x(double x) const;
  int cell_y(double y) const;

  Domain extent_;
  double cell_size_;
  int nx_ = 0, ny_ = 0;
  std::vector<std::vector<int>> cells_;
  std::vector<Point2> points_;
};

}  // namespace treelink
