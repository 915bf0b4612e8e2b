#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "treelink/growth.hpp"
#include "treelink/metrics.hpp"
#include "treelink/raster.hpp"
#include "treelink/records.hpp"
#include "treelink/rng.hpp"

namespace treelink {

// Parametric mark (canopy volume) model: log-normal sizes whose log-mean
// shifts linearly in the first two synthetic covariates.
struct MarkModel {
  double log_mean = 3.4012;  // log(30 m^3)
  double log_sd = 0.55;
  std::array<double, 2> covariate_slopes = {0.25, 0.25};
  double recruit_beta_b = 8.0;  // recruit mark ~ min_parent_mark * Beta(1, b)
};

struct SimConfig {
  double density = 0.06;          // points / m^2 over the generation square
  double domain_side = 130.0;     // generation square side (m)
  double analysis_side = 100.0;   // centered observation window side (m)
  double hardcore_radius = 1.2;   // inhibition radius (m)
  double softcore_violation_prob = 0.05;
  double sigma_obs = 0.25;        // location noise SD (m)
  double theta_true = 0.0;        // file-2 rotation (radians)
  Point2 t_true;                  // file-2 translation (m)
  GrowthParams growth;            // generating growth parameters (gaussian)
  double recruit_rate = 3e-5;     // recruits per m^3 of standing volume
  int year1 = 2015;
  int year2 = 2019;
  int n_covariates = 4;
  double raster_cellsize = 2.0;
  int smoothing_passes = 40;      // binomial smoothing passes for the fields
  MarkModel mark_model;
  std::uint64_t seed = 1;

  Domain full_domain() const { return {0.0, 0.0, domain_side, domain_side}; }
  Domain analysis_domain() const {
    const double m = 0.5 * (domain_side - analysis_side);
    return {m, m, m + analysis_side, m + analysis_side};
  }
  void validate() const;
};

struct LatentPoint {
  Point2 loc;
  double mark = 0.0;   // true canopy volume at the first time point (m^3)
  bool recruit = false;
};

struct SimTruth {
  std::vector<LatentPoint> latents;  // parents first, recruits appended
  std::vector<TruthLink> links;      // surviving record -> latent index
  GrowthParams generating_growth;
  double sigma_obs = 0.0;
};

struct SimDataset {
  RecordSet records;
  std::vector<Raster> covariates;  // standardized over the analysis domain
  SimTruth truth;
};

// Smooth standardized Gaussian random fields over the generation square.
std::vector<Raster> generate_covariate_rasters(const SimConfig& config, Rng& rng);

// Sequential uniform proposals with soft-core inhibition; stops when the
// realized count reaches ceil(density * domain_side^2). Throws
// PackingInfeasible after 1e6 consecutive rejections.
std::vector<LatentPoint> generate_latents(const SimConfig& config,
                                          const std::vector<Raster>& covariates,
                                          Rng& rng);

// Recruits placed around mark-weighted parents with t(1) offsets; marks are
// min-parent-bounded scaled Beta draws.
std::vector<LatentPoint> generate_recruits(const std::vector<LatentPoint>& latents,
                                           const SimConfig& config, Rng& rng);

// Observes both files (noise, transform, growth, truncation to the analysis
// window) and records the surviving truth links.
struct ObservationResult {
  RecordSet records;
  SimTruth truth;
};
ObservationResult generate_observation(const std::vector<LatentPoint>& latents,
                                       const std::vector<LatentPoint>& recruits,
                                       const std::vector<Raster>& covariates,
                                       const SimConfig& config, Rng& rng);

SimDataset generate_dataset(const SimConfig& config);

}  // namespace treelink
