#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "treelink/growth.hpp"
#include "treelink/linkage.hpp"

namespace treelink {

struct LAConfig {
  int k = 25;                     // linkage draws
  int l = 200;                    // growth draws per linkage draw
  double r1 = 0.9, r2 = 1.6;      // growth-rate bounds
  double boundary_buffer = 15.0;  // m from the domain edge
  std::uint64_t seed = 1;
  int threads = 1;

  void validate() const;
};

struct PooledDraw {
  int linkage_draw = 0;  // t
  int growth_draw = 0;   // u
  GrowthParams params;
};

struct ParamSummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double lo90 = 0.0;  // equal-tailed 90% interval
  double hi90 = 0.0;
};

struct PooledPosterior {
  std::vector<PooledDraw> draws;  // ordered by (t, u), k*l entries
  ErrorFamily family = ErrorFamily::Gaussian;
  int beta_dim = 0;
  int skipped_draws = 0;          // linkage draws with too few clusters
  std::vector<int> cluster_counts;  // per used linkage draw

  std::vector<std::string> param_names() const;
  std::vector<double> column(const std::string& name) const;
  std::vector<ParamSummary> summaries() const;
};

// Linkage-averaged growth posterior: k linkage draws sampled uniformly
// without replacement, one conditional growth fit each, pooled with equal
// weight. Conditional fits run concurrently; pooling order is (t, u) so the
// result is independent of scheduling.
PooledPosterior run_la(const LinkagePosterior& linkage, const RecordSet& records,
                       const Domain& domain, const std::vector<Raster>& standardized,
                       const CovariateOptions& covariates,
                       const GrowthPriors& priors, const GrowthMcmcConfig& growth_config,
                       const LAConfig& config);

struct NdmMatch {
  int file1_position = 0;
  int file2_position = 0;
};

// Each file-1 record paired with its Euclidean-nearest file-2 record, ties
// broken by ascending record id; many-to-one allowed, no deduplication.
std::vector<NdmMatch> ndm_link(const RecordFile& file1, const RecordFile& file2);

struct NDMResult {
  std::vector<NdmMatch> matches;
  std::vector<GrowthCluster> clusters;  // one per surviving pair
  GrowthPosterior posterior;
};

// Full NDM baseline: match, one growth observation per pair, the same r and
// boundary restrictions as the LA pathway, single growth fit.
NDMResult run_ndm(const RecordSet& records, const Domain& domain,
                  const std::vector<Raster>& standardized,
                  const CovariateOptions& covariates, const GrowthPriors& priors,
                  const GrowthMcmcConfig& growth_config, const LAConfig& config);

// Equal-tailed interval at quantiles ((1-level)/2, 1-(1-level)/2) with linear
// interpolation between order statistics (h = (n-1)p + 1).
std::pair<double, double> credible_interval(std::span<const double> draws, double level);

double quantile(std::span<const double> sorted, double p);

}  // namespace treelink
