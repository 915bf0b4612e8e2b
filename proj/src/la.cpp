#include "treelink/la.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <optional>

#include "treelink/errors.hpp"

namespace treelink {

void LAConfig::validate() const {
  if (k < 1 || l < 1) throw Error(ErrorCode::InvalidConfig, "need k >= 1 and l >= 1");
  if (!(0.0 < r1 && r1 < r2)) throw Error(ErrorCode::InvalidConfig, "need 0 < r1 < r2");
  if (boundary_buffer < 0.0 || threads < 1) {
    throw Error(ErrorCode::InvalidConfig, "boundary_buffer >= 0 and threads >= 1");
  }
}

std::vector<std::string> PooledPosterior::param_names() const {
  GrowthPosterior proto;
  proto.family = family;
  proto.beta_dim = beta_dim;
  return proto.param_names();
}

std::vector<double> PooledPosterior::column(const std::string& name) const {
  const auto names = param_names();
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) {
    throw Error(ErrorCode::InvalidConfig, "unknown parameter " + name);
  }
  const std::size_t col = static_cast<std::size_t>(it - names.begin());
  GrowthPosterior proto;
  proto.family = family;
  proto.beta_dim = beta_dim;
  std::vector<double> out;
  out.reserve(draws.size());
  for (const PooledDraw& d : draws) out.push_back(proto.flatten(d.params)[col]);
  return out;
}

std::vector<ParamSummary> PooledPosterior::summaries() const {
  std::vector<ParamSummary> out;
  for (const std::string& name : param_names()) {
    std::vector<double> col = column(name);
    ParamSummary s;
    s.name = name;
    double sum = 0.0;
    for (double v : col) sum += v;
    s.mean = sum / col.size();
    double ss = 0.0;
    for (double v : col) ss += (v - s.mean) * (v - s.mean);
    s.sd = col.size() > 1 ? std::sqrt(ss / (col.size() - 1)) : 0.0;
    const auto [lo, hi] = credible_interval(col, 0.90);
    s.lo90 = lo;
    s.hi90 = hi;
    out.push_back(s);
  }
  return out;
}

namespace {

struct ConditionalFit {
  std::optional<GrowthPosterior> posterior;
  int cluster_count = 0;
};

ConditionalFit fit_one_draw(const LinkageDraw& draw, const RecordSet& records,
                            const Domain& domain,
                            const std::vector<Raster>& standardized,
                            const CovariateOptions& covariates,
                            const GrowthPriors& priors,
                            const GrowthMcmcConfig& growth_config,
                            const LAConfig& config) {
  const auto partition = derive_clusters(draw.lambda, records);
  auto clusters =
      derive_growth_clusters(partition, records, draw.s, config.r1, config.r2);
  apply_boundary_buffer(clusters, domain, config.boundary_buffer);
  attach_covariates(clusters, standardized, records, covariates);

  ConditionalFit fit;
  fit.cluster_count = static_cast<int>(clusters.size());
  const int beta_dim = clusters.empty() ? 0 : static_cast<int>(clusters.front().covariates.size());
  if (clusters.empty() || fit.cluster_count < beta_dim + 2) return fit;
  fit.posterior = fit_growth(clusters, priors, growth_config);
  return fit;
}

}  // namespace

PooledPosterior run_la(const LinkagePosterior& linkage, const RecordSet& records,
                       const Domain& domain, const std::vector<Raster>& standardized,
                       const CovariateOptions& covariates,
                       const GrowthPriors& priors, const GrowthMcmcConfig& growth_config,
                       const LAConfig& config) {
  config.validate();
  if (static_cast<int>(linkage.draws.size()) < config.k) {
    throw Error(ErrorCode::ValidationError,
                "linkage posterior has " + std::to_string(linkage.draws.size()) +
                    " retained draws, need k = " + std::to_string(config.k));
  }

  Rng rng(config.seed);
  const auto picks = rng.sample_without_replacement(linkage.draws.size(),
                                                    static_cast<std::size_t>(config.k));

  // Per-draw growth runs share burn-in length and retain exactly l draws.
  GrowthMcmcConfig per_draw = growth_config;
  per_draw.iterations = growth_config.burnin + config.l * growth_config.thin;

  std::vector<ConditionalFit> fits(config.k);
  const int workers = std::min(config.threads, config.k);
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (;;) {
      const int t = next.fetch_add(1);
      if (t >= config.k) return;
      GrowthMcmcConfig cfg = per_draw;
      cfg.seed = Rng::stream(config.seed, static_cast<std::uint64_t>(t) + 1).next_u64();
      fits[t] = fit_one_draw(linkage.draws[picks[t]], records, domain, standardized,
                             covariates, priors, cfg, config);
    }
  };
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::future<void>> tasks;
    for (int w = 0; w < workers; ++w) tasks.push_back(std::async(std::launch::async, worker));
    for (auto& task : tasks) task.get();
  }

  PooledPosterior pooled;
  pooled.family = priors.error_family;
  for (int t = 0; t < config.k; ++t) {
    const ConditionalFit& fit = fits[t];
    if (!fit.posterior.has_value()) {
      ++pooled.skipped_draws;
      continue;
    }
    pooled.cluster_counts.push_back(fit.cluster_count);
    pooled.beta_dim = fit.posterior->beta_dim;
    const auto& draws = fit.posterior->draws;
    for (int u = 0; u < static_cast<int>(draws.size()); ++u) {
      pooled.draws.push_back({t, u, draws[u]});
    }
  }
  if (pooled.draws.empty()) {
    throw Error(ErrorCode::NoUsableDraws,
                "every linkage draw was skipped (too few growth clusters)");
  }
  return pooled;
}

std::vector<NdmMatch> ndm_link(const RecordFile& file1, const RecordFile& file2) {
  if (file2.records.empty()) {
    throw Error(ErrorCode::ValidationError, "NDM requires a nonempty second file");
  }
  std::vector<NdmMatch> matches;
  matches.reserve(file1.records.size());
  for (int i = 0; i < static_cast<int>(file1.records.size()); ++i) {
    const Point2 y = file1.records[i].loc;
    int best = 0;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (int j = 0; j < static_cast<int>(file2.records.size()); ++j) {
      const double d2 = squared_norm(y - file2.records[j].loc);
      if (d2 < best_d2 ||
          (d2 == best_d2 && file2.records[j].id < file2.records[best].id)) {
        best_d2 = d2;
        best = j;
      }
    }
    matches.push_back({i, best});
  }
  return matches;
}

NDMResult run_ndm(const RecordSet& records, const Domain& domain,
                  const std::vector<Raster>& standardized,
                  const CovariateOptions& covariates, const GrowthPriors& priors,
                  const GrowthMcmcConfig& growth_config, const LAConfig& config) {
  config.validate();
  NDMResult result;
  result.matches = ndm_link(records.first, records.second);

  const double years = records.years_span();
  if (!(years > 0.0)) {
    throw Error(ErrorCode::ValidationError, "file years must be strictly increasing");
  }
  for (const NdmMatch& m : result.matches) {
    const Record& r1 = records.first.records[m.file1_position];
    const Record& r2 = records.second.records[m.file2_position];
    GrowthCluster c;
    c.cluster_id = m.file1_position;
    c.v_first = r1.volume;
    c.v_last = r2.volume;
    if (!(config.r1 * c.v_first < c.v_last && c.v_last < config.r2 * c.v_first)) continue;
    c.years_span = years;
    c.g = (c.v_last - c.v_first) / years;
    c.latent_location = r1.loc;  // no latent draw in this pathway
    c.file1_members.push_back(m.file1_position);
    c.file2_members.push_back(m.file2_position);
    result.clusters.push_back(std::move(c));
  }
  apply_boundary_buffer(result.clusters, domain, config.boundary_buffer);
  attach_covariates(result.clusters, standardized, records, covariates);
  result.posterior = fit_growth(result.clusters, priors, growth_config);
  return result;
}

double quantile(std::span<const double> sorted, double p) {
  const std::size_t n = sorted.size();
  if (n == 0) throw Error(ErrorCode::EmptyInput, "quantile of empty sample");
  if (n == 1) return sorted[0];
  const double h = (static_cast<double>(n) - 1.0) * p;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, n - 1);
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::pair<double, double> credible_interval(std::span<const double> draws, double level) {
  if (draws.size() < 2) {
    throw Error(ErrorCode::ValidationError, "credible_interval needs at least 2 draws");
  }
  if (!(level > 0.0 && level < 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "level must lie in (0, 1)");
  }
  std::vector<double> sorted(draws.begin(), draws.end());
  std::sort(sorted.begin(), sorted.end());
  const double a = (1.0 - level) / 2.0;
  return {quantile(sorted, a), quantile(sorted, 1.0 - a)};
}

}  // namespace treelink
