#include "treelink/competition.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "treelink/errors.hpp"
#include "treelink/grid_index.hpp"

namespace treelink {

std::vector<CompetitionMetrics> competition_metrics(const RecordFile& file1,
                                                    double radius) {
  if (!(radius > 0.0)) {
    throw Error(ErrorCode::ValidationError, "competition radius must be positive");
  }
  const auto& records = file1.records;
  const int n = static_cast<int>(records.size());
  std::vector<CompetitionMetrics> out(n);
  if (n == 0) return out;

  std::vector<Point2> locs(n);
  for (int i = 0; i < n; ++i) locs[i] = records[i].loc;
  Domain extent = data_extent({file1, file1});
  // Degenerate extents (single record or collinear points) still need a valid grid.
  extent = expand_domain(extent, radius + 1.0);
  GridIndex grid(extent, radius);
  grid.rebuild(locs);

  const double disc_area = std::numbers::pi * radius * radius;
  for (int i = 0; i < n; ++i) {
    double nearest = std::numeric_limits<double>::infinity();
    double dist_sum = 0.0;
    double lnv = 0.0;
    int count = 0;
    for (int j : grid.query_box(locs[i], radius)) {
      if (j == i) continue;
      const double d = distance(locs[i], locs[j]);
      if (d >= radius) continue;  // strictly within
      ++count;
      dist_sum += d;
      nearest = std::min(nearest, d);
      if (records[j].volume > records[i].volume) lnv += records[j].volume;
    }
    auto& m = out[i];
    m.lnv = lnv;
    m.nd = count / disc_area;
    m.has_neighbors = count > 0;
    m.rsi = count > 0 ? nearest / (dist_sum / count)
                      : std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

}  // namespace treelink
