#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "treelink/la.hpp"
#include "treelink/linkage.hpp"
#include "treelink/records.hpp"

namespace treelink {

// A coreference pair of global record indices (file 1 records first, then
// file 2), canonical low*n + high encoding; sorted unique sets support the
// TP/FP/FN intersections directly.
using PairSet = std::vector<std::uint64_t>;

PairSet pairs_from_lambda(std::span<const int> lambda, int n);
PairSet pairs_from_matches(const std::vector<NdmMatch>& matches, int n1, int n);

struct TruthLink {
  int file_index = 1;
  int record_id = 0;
  int latent_id = 0;
};

std::vector<TruthLink> read_truth_csv(const std::string& path);
void write_truth_csv(const std::string& path, const std::vector<TruthLink>& links);

// Truth links resolved to coreference pairs over the record universe of
// `records` (links to records absent from the set are ignored).
PairSet pairs_from_truth(const std::vector<TruthLink>& links, const RecordSet& records);

struct LinkEvalResult {
  long tp = 0, fp = 0, fn = 0;
  double precision = 1.0;  // 1 by convention when nothing is predicted
  double recall = 0.0;
};

LinkEvalResult eval_links(const PairSet& predicted, const PairSet& truth);

// Per-draw metrics over a linkage posterior.
std::vector<LinkEvalResult> eval_links_per_draw(const LinkagePosterior& posterior,
                                                const PairSet& truth);

struct ParameterCoverage {
  std::string name;
  double truth = 0.0;
  int intervals = 0;
  int hits = 0;
  double coverage = 0.0;
};

struct CoverageResult {
  std::vector<ParameterCoverage> parameters;
};

// Interval sets are per-replicate maps name -> (lo, hi); coverage is the
// fraction of replicates whose interval contains the truth for that name.
CoverageResult eval_coverage(
    const std::vector<std::map<std::string, std::pair<double, double>>>& intervals,
    const std::map<std::string, double>& truth);

// Per-iteration timing table assembled from linkage archives.
struct TimingRow {
  int n = 0;
  double box_half_width = 0.0;
  bool unrestricted = false;
  double mean_seconds_per_iteration = 0.0;
  double speedup_vs_unrestricted = 1.0;
};

// Rows sorted by (n, box); speedups are relative to the unrestricted-box row
// with the same n (1.0 when absent).
std::vector<TimingRow> timing_report(
    const std::vector<std::tuple<int, double, bool, double>>& archives);

}  // namespace treelink
