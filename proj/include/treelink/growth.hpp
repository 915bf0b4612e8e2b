#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "treelink/distributions.hpp"
#include "treelink/errors.hpp"
#include "treelink/raster.hpp"
#include "treelink/records.hpp"

namespace treelink {

struct RecordRef {
  int file_index = 1;  // 1 or 2
  int position = 0;    // index into that file's records vector
};

// One cluster of the partition C(lambda): records linked to a common latent.
struct Cluster {
  int latent = -1;
  std::vector<RecordRef> members;
};

// Nonempty clusters of the linkage vector, ordered by latent index. `lambda`
// is in global record order (file 1 then file 2), as in LinkageState.
std::vector<Cluster> derive_clusters(std::span<const int> lambda,
                                     const RecordSet& records);

// A linked cross-file entity whose merged volumes changed plausibly.
struct GrowthCluster {
  int cluster_id = -1;       // latent index of the source cluster
  double v_first = 0.0;      // merged volume in the earliest file (m^3)
  double v_last = 0.0;       // merged volume in the latest file (m^3)
  double years_span = 0.0;
  double g = 0.0;            // annual growth (m^3 / yr)
  Point2 latent_location;
  std::vector<double> covariates;  // length p+1, leading 1
  std::vector<int> file1_members;  // record positions, for diagnostics/competition
  std::vector<int> file2_members;
};

// Keeps clusters with records in both files whose merged-volume ratio lies in
// (r1, r2); `s` supplies the latent location per cluster latent index.
std::vector<GrowthCluster> derive_growth_clusters(const std::vector<Cluster>& partition,
                                                  const RecordSet& records,
                                                  std::span<const Point2> s,
                                                  double r1, double r2);

// Drops clusters whose latent location is within `buffer` of the domain edge.
void apply_boundary_buffer(std::vector<GrowthCluster>& clusters,
                           const Domain& domain, double buffer);

// Sets each cluster's latent location to its mean observed file-1 location;
// used by the pathways (NDM, true-linkage) that carry no latent draw.
void fill_locations_from_file1(std::vector<GrowthCluster>& clusters,
                               const RecordSet& records);

struct CovariateOptions {
  bool use_competition = false;
  double competition_radius = 15.0;
};

// Fills each cluster's covariate row: leading 1, then the standardized raster
// values at the latent location, then (RSI, LNV, ND) of the largest-volume
// file-1 member when competition metrics are enabled. Clusters whose
// representative has no neighbors inside the radius are removed.
void attach_covariates(std::vector<GrowthCluster>& clusters,
                       const std::vector<Raster>& standardized,
                       const RecordSet& records, const CovariateOptions& options);

enum class ErrorFamily { SkewT, Gaussian };

struct GrowthParams {
  double alpha = 1.0;           // curvature
  double gamma = 10.0;          // half-saturation volume (m^3)
  std::vector<double> beta;     // length p+1
  double tau = 1.0;             // error variance
  double delta = 0.0;           // skewness, (-1, 1)
  double omega = 10.0;          // tail parameter, > 2

  double dot_beta(std::span<const double> x) const;
};

// Michaelis-Menten mean growth: (x . beta) v^alpha / (gamma^alpha + v^alpha).
double mm_mean(const GrowthParams& params, std::span<const double> x, double v_first);

// Sum of per-cluster log densities; -inf when params leave the supported
// region (signals rejection to the sampler).
double growth_loglik(const GrowthParams& params,
                     const std::vector<GrowthCluster>& clusters,
                     ErrorFamily family);

struct GrowthPriors {
  double a_gamma = 1.0, b_gamma = 100.0;  // Uniform support for gamma
  double a_alpha = 1.0, b_alpha = 1.0;    // Beta shapes for alpha
  double c_alpha = 0.75, d_alpha = 3.5;   // scaled-Beta support for alpha
  std::vector<double> mu_beta;            // per-coefficient normal means
  std::vector<double> sigma2_beta;        // per-coefficient normal variances
  double b_tau = 10.0;                    // tau ~ Uniform(0, b_tau)
  double sigma2_delta = 1.0;              // delta ~ Normal_[-1,1](0, sigma2_delta)
  double b_omega = 10.0;                  // omega = 2 + Gamma(2, b_omega)
  ErrorFamily error_family = ErrorFamily::Gaussian;

  // Expands defaulted beta hyperparameters to dimension and checks ordering.
  void resolve(int beta_dim);
  void validate() const;
};

double growth_log_prior(const GrowthParams& params, const GrowthPriors& priors);

struct GrowthMcmcConfig {
  int iterations = 6000;
  int burnin = 3000;
  int thin = 10;
  std::uint64_t seed = 1;
  bool prior_only = false;  // drop the likelihood term (prior recovery checks)

  void validate() const;
};

struct GrowthPosterior {
  std::vector<GrowthParams> draws;  // post burn-in, thinned
  ErrorFamily family = ErrorFamily::Gaussian;
  int beta_dim = 0;
  std::vector<double> block_acceptance;  // beta, (gamma, alpha), error block

  std::vector<std::string> param_names() const;
  // Draw flattened in param_names() order.
  std::vector<double> flatten(const GrowthParams& p) const;
};

// Adaptive random-walk Metropolis-within-Gibbs over the blocks (beta),
// (gamma, alpha), (tau[, delta, omega]); proposals on unconstrained scales
// with Jacobian corrections, per-block covariance adapted during burn-in and
// frozen afterward. Deterministic under seed.
GrowthPosterior fit_growth(const std::vector<GrowthCluster>& clusters,
                           const GrowthPriors& priors, const GrowthMcmcConfig& config);

// Thrown when a burn-in block never moves; carries the partial trace.
class PoorMixingError : public Error {
 public:
  PoorMixingError(const std::string& message, GrowthPosterior partial)
      : Error(ErrorCode::PoorMixing, message), partial_trace(std::move(partial)) {}
  GrowthPosterior partial_trace;
};

}  // namespace treelink
