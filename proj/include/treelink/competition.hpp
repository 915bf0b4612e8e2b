#pragma once

#include <vector>

#include "treelink/records.hpp"

namespace treelink {

// Semi-distance-dependent competition indices for one record, computed from
// neighbors strictly within the radius (the focal record excluded).
//   rsi: nearest neighbor distance / mean neighbor distance
//   lnv: summed volumes of neighbors larger than the focal record
//   nd:  neighbor count per m^2 of the neighborhood disc
// A record with no neighbors has has_neighbors = false and rsi = NaN; such
// records are excluded from downstream growth fits.
struct CompetitionMetrics {
  double rsi = 0.0;
  double lnv = 0.0;
  double nd = 0.0;
  bool has_neighbors = false;
};

// Indices follow the record order of `file1` (metrics use the first scan's
// observed locations).
std::vector<CompetitionMetrics> competition_metrics(const RecordFile& file1,
                                                    double radius);

}  // namespace treelink
