#include "treelink/simgen.hpp"

#include <algorithm>
#include <cmath>

#include "treelink/errors.hpp"

namespace treelink {

void SimConfig::validate() const {
  if (!(density > 0.0)) throw Error(ErrorCode::InvalidConfig, "density must be positive");
  if (!(domain_side > 0.0) || !(analysis_side > 0.0) || analysis_side > domain_side) {
    throw Error(ErrorCode::InvalidConfig, "need 0 < analysis_side <= domain_side");
  }
  if (softcore_violation_prob < 0.0 || softcore_violation_prob >= 1.0) {
    throw Error(ErrorCode::InvalidConfig, "softcore_violation_prob must lie in [0, 1)");
  }
  if (!(sigma_obs > 0.0) || hardcore_radius < 0.0 || recruit_rate < 0.0) {
    throw Error(ErrorCode::InvalidConfig,
                "sigma_obs > 0, hardcore_radius >= 0, recruit_rate >= 0 required");
  }
  if (year2 <= year1) throw Error(ErrorCode::InvalidConfig, "year2 must exceed year1");
  if (n_covariates < 2 || !(raster_cellsize > 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "need n_covariates >= 2 and raster_cellsize > 0");
  }
  if (static_cast<int>(growth.beta.size()) != n_covariates + 1) {
    throw Error(ErrorCode::InvalidConfig,
                "growth beta length must equal n_covariates + 1");
  }
}

std::vector<Raster> generate_covariate_rasters(const SimConfig& config, Rng& rng) {
  const int cells = std::max(
      1, static_cast<int>(std::ceil(config.domain_side / config.raster_cellsize)));
  std::vector<Raster> rasters;
  rasters.reserve(config.n_covariates);
  for (int c = 0; c < config.n_covariates; ++c) {
    Raster r;
    r.ncols = cells;
    r.nrows = cells;
    r.xll = 0.0;
    r.yll = 0.0;
    r.cellsize = config.raster_cellsize;
    r.nodata = -9999.0;
    r.values.resize(static_cast<std::size_t>(cells) * cells);
    for (double& v : r.values) v = rng.normal();

    // Separable binomial [1 2 1]/4 smoothing approximates a Gaussian kernel;
    // the pass count controls the correlation length.
    std::vector<double> tmp(r.values.size());
    for (int pass = 0; pass < config.smoothing_passes; ++pass) {
      for (int row = 0; row < cells; ++row) {
        for (int col = 0; col < cells; ++col) {
          const int lo = std::max(0, col - 1);
          const int hi = std::min(cells - 1, col + 1);
          tmp[static_cast<std::size_t>(row) * cells + col] =
              0.25 * (r.at(row, lo) + 2.0 * r.at(row, col) + r.at(row, hi));
        }
      }
      for (int col = 0; col < cells; ++col) {
        for (int row = 0; row < cells; ++row) {
          const int lo = std::max(0, row - 1);
          const int hi = std::min(cells - 1, row + 1);
          r.at(row, col) = 0.25 * (tmp[static_cast<std::size_t>(lo) * cells + col] +
                                   2.0 * tmp[static_cast<std::size_t>(row) * cells + col] +
                                   tmp[static_cast<std::size_t>(hi) * cells + col]);
        }
      }
    }
    rasters.push_back(std::move(r));
  }
  standardize_covariates(rasters, config.analysis_domain());
  return rasters;
}

namespace {

double mark_from_covariates(const SimConfig& config,
                            const std::vector<Raster>& covariates, Point2 loc,
                            Rng& rng) {
  double log_mu = config.mark_model.log_mean;
  for (std::size_t c = 0; c < config.mark_model.covariate_slopes.size() &&
                          c < covariates.size();
       ++c) {
    log_mu += config.mark_model.covariate_slopes[c] * sample_raster(covariates[c], loc);
  }
  return std::exp(log_mu + config.mark_model.log_sd * rng.normal());
}

std::vector<double> covariate_row(const std::vector<Raster>& covariates, Point2 loc) {
  std::vector<double> x;
  x.reserve(covariates.size() + 1);
  x.push_back(1.0);
  for (const Raster& r : covariates) x.push_back(sample_raster(r, loc));
  return x;
}

}  // namespace

std::vector<LatentPoint> generate_latents(const SimConfig& config,
                                          const std::vector<Raster>& covariates,
                                          Rng& rng) {
  config.validate();
  const Domain full = config.full_domain();
  const long target = static_cast<long>(
      std::ceil(config.density * config.domain_side * config.domain_side));
  std::vector<LatentPoint> latents;
  latents.reserve(target);

  long consecutive_rejections = 0;
  while (static_cast<long>(latents.size()) < target) {
    if (consecutive_rejections >= 1000000) {
      throw Error(ErrorCode::PackingInfeasible,
                  "inhibition radius too large for the requested density");
    }
    const Point2 proposal{rng.uniform(full.xmin, full.xmax),
                          rng.uniform(full.ymin, full.ymax)};
    bool violates = false;
    for (const LatentPoint& p : latents) {
      if (squared_norm(p.loc - proposal) <
          config.hardcore_radius * config.hardcore_radius) {
        violates = true;
        break;
      }
    }
    if (violates && rng.uniform() >= config.softcore_violation_prob) {
      ++consecutive_rejections;
      continue;
    }
    consecutive_rejections = 0;
    LatentPoint p;
    p.loc = proposal;
    p.mark = mark_from_covariates(config, covariates, proposal, rng);
    latents.push_back(p);
  }
  return latents;
}

std::vector<LatentPoint> generate_recruits(const std::vector<LatentPoint>& latents,
                                           const SimConfig& config, Rng& rng) {
  if (latents.empty()) throw Error(ErrorCode::EmptyInput, "no parent latents");
  double total_mark = 0.0;
  double min_mark = latents.front().mark;
  std::vector<double> weights(latents.size());
  for (std::size_t i = 0; i < latents.size(); ++i) {
    weights[i] = latents[i].mark;
    total_mark += latents[i].mark;
    min_mark = std::min(min_mark, latents[i].mark);
  }
  const long count = std::lround(config.recruit_rate * total_mark);
  const Domain full = config.full_domain();

  std::vector<LatentPoint> recruits;
  recruits.reserve(count);
  for (long r = 0; r < count; ++r) {
    const std::size_t parent = rng.categorical(weights);
    Point2 loc;
    do {
      loc = latents[parent].loc + Point2{rng.cauchy(), rng.cauchy()};
    } while (!full.contains(loc));
    LatentPoint p;
    p.loc = loc;
    p.mark = min_mark * rng.beta(1.0, config.mark_model.recruit_beta_b);
    p.recruit = true;
    recruits.push_back(p);
  }
  return recruits;
}

ObservationResult generate_observation(const std::vector<LatentPoint>& latents,
                                       const std::vector<LatentPoint>& recruits,
                                       const std::vector<Raster>& covariates,
                                       const SimConfig& config, Rng& rng) {
  constexpr double kVolumeFloor = 0.01;
  const Domain window = config.analysis_domain();
  const RigidTransform tr{config.theta_true, config.t_true, window.midpoint()};
  const double years = config.year2 - config.year1;

  ObservationResult out;
  out.records.first.file_index = 1;
  out.records.first.year = config.year1;
  out.records.second.file_index = 2;
  out.records.second.year = config.year2;
  out.truth.generating_growth = config.growth;
  out.truth.sigma_obs = config.sigma_obs;
  out.truth.latents = latents;
  out.truth.latents.insert(out.truth.latents.end(), recruits.begin(), recruits.end());

  // File 1: parents only, observed with location noise, volume = mark.
  for (std::size_t j = 0; j < latents.size(); ++j) {
    const Point2 obs = latents[j].loc + Point2{rng.normal(0.0, config.sigma_obs),
                                               rng.normal(0.0, config.sigma_obs)};
    if (!window.contains(obs)) continue;
    const int id = static_cast<int>(out.records.first.records.size());
    out.records.first.records.push_back({id, obs, latents[j].mark});
    out.truth.links.push_back({1, id, static_cast<int>(j)});
  }

  // File 2: parents grown with annual-scale Gaussian error, then recruits
  // (grown without the error term - they are unobserved in file 1).
  for (std::size_t j = 0; j < latents.size(); ++j) {
    const Point2 obs =
        apply_transform(tr, latents[j].loc) +
        Point2{rng.normal(0.0, config.sigma_obs), rng.normal(0.0, config.sigma_obs)};
    const double mu = mm_mean(config.growth, covariate_row(covariates, latents[j].loc),
                              latents[j].mark);
    const double volume = std::max(
        kVolumeFloor,
        latents[j].mark +
            years * (mu + rng.normal(0.0, std::sqrt(config.growth.tau))));
    if (!window.contains(obs)) continue;
    const int id = static_cast<int>(out.records.second.records.size());
    out.records.second.records.push_back({id, obs, volume});
    out.truth.links.push_back({2, id, static_cast<int>(j)});
  }
  for (std::size_t r = 0; r < recruits.size(); ++r) {
    const Point2 obs =
        apply_transform(tr, recruits[r].loc) +
        Point2{rng.normal(0.0, config.sigma_obs), rng.normal(0.0, config.sigma_obs)};
    const double mu = mm_mean(config.growth, covariate_row(covariates, recruits[r].loc),
                              recruits[r].mark);
    const double volume = std::max(kVolumeFloor, recruits[r].mark + years * mu);
    if (!window.contains(obs)) continue;
    const int id = static_cast<int>(out.records.second.records.size());
    out.records.second.records.push_back({id, obs, volume});
    out.truth.links.push_back(
        {2, id, static_cast<int>(latents.size() + r)});
  }
  return out;
}

SimDataset generate_dataset(const SimConfig& config) {
  config.validate();
  // Independent streams per stage keep the composition deterministic even if
  // one stage changes its draw count.
  Rng raster_rng = Rng::stream(config.seed, 0);
  Rng latent_rng = Rng::stream(config.seed, 1);
  Rng recruit_rng = Rng::stream(config.seed, 2);
  Rng obs_rng = Rng::stream(config.seed, 3);

  SimDataset dataset;
  dataset.covariates = generate_covariate_rasters(config, raster_rng);
  const auto latents = generate_latents(config, dataset.covariates, latent_rng);
  const auto recruits = generate_recruits(latents, config, recruit_rng);
  auto obs = generate_observation(latents, recruits, dataset.covariates, config, obs_rng);
  dataset.records = std::move(obs.records);
  dataset.truth = std::move(obs.truth);
  return dataset;
}

}  // namespace treelink
