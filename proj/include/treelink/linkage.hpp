#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "treelink/geometry.hpp"
#include "treelink/grid_index.hpp"
#include "treelink/records.hpp"
#include "treelink/rng.hpp"

namespace treelink {

// Maximum number of latent entities: min(ceil(q * max(n1, n2)), n1 + n2).
// Throws EmptyInput when both files are empty.
int latent_count(int n1, int n2, double q);

struct LinkagePriors {
  double c_sigma = 2.0;    // Inverse-Gamma shape for sigma^2
  double d_sigma = 0.5;    // Inverse-Gamma scale for sigma^2
  double b_sigma = 1.0;    // upper truncation of sigma^2 (m^2)
  double kappa = 100.0;    // von Mises concentration for theta
  double nu = 0.0;         // von Mises mean direction
  double b_theta = 0.01;   // |theta| truncation (radians)
  double sigma2_t = 1.0;   // translation prior variance (m^2)
  double q = 1.25;         // latent scale factor, N = q * max(n_i)
  std::array<bool, 2> fix_theta = {true, false};
  std::array<bool, 2> fix_translation = {true, false};

  void validate() const;
};

struct SamplerConfig {
  int iterations = 2000;
  int burnin = 500;
  int thin = 10;
  double box_half_width = 2.0;     // candidate box half-width (m)
  int min_candidates = 2;          // grow the box until this many latents found
  double box_growth_factor = 1.5;
  bool random_scan = false;        // default is ascending (file, record) order
  double latent_domain_margin = 5.0;  // D* = D expanded by this margin (m)
  double theta_step = 0.002;       // initial MH step for theta, adapted in burn-in
  std::uint64_t seed = 1;

  void validate() const;
};

// Flattened record data shared by the update kernels. Global record index g
// runs over file 1 first, then file 2.
struct LinkageData {
  std::vector<Point2> loc;
  std::vector<double> volume;
  int n1 = 0;
  int n2 = 0;
  Domain domain;         // D, the analysis domain
  Domain latent_domain;  // D*, supports the latent locations
  Point2 mu_d;           // midpoint of D; rotations pivot here

  static LinkageData build(const RecordSet& records, const Domain& domain,
                           double latent_margin);

  int n() const { return n1 + n2; }
  int file_of(int g) const { return g < n1 ? 0 : 1; }
};

// Full MCMC state. File 1 anchors the latent space: theta[0] and t[0] stay 0.
struct LinkageState {
  std::vector<int> lambda;   // record -> latent index (0-based)
  std::vector<Point2> s;     // latent locations, inside D*
  double sigma2 = 0.1;
  std::array<double, 2> theta = {0.0, 0.0};
  std::array<Point2, 2> t = {Point2{}, Point2{}};
  int s_truncation_clamps = 0;  // rejection-cap fallbacks in update_s

  RigidTransform transform(const LinkageData& data, int file) const {
    return {theta[file], t[file], data.mu_d};
  }
  void check_invariants(const LinkageData& data, const LinkagePriors& priors) const;
};

struct LinkageDraw {
  int iteration = 0;
  std::vector<int> lambda;
  std::vector<Point2> s;
  double sigma2 = 0.0;
  double theta2 = 0.0;
  Point2 t2;
};

struct LinkagePosterior {
  int n1 = 0;
  int n2 = 0;
  int latent_count = 0;
  int iterations = 0, burnin = 0, thin = 0;
  std::uint64_t seed = 0;
  std::vector<LinkageDraw> draws;      // post burn-in, thinned
  std::vector<double> iteration_seconds;
  int s_truncation_clamps = 0;

  int n() const { return n1 + n2; }
};

LinkageState init_state(const LinkageData& data, int latents,
                        const LinkagePriors& priors, Rng& rng);

// Candidate latents for one record with their categorical probabilities,
// proportional to exp(-||y - T_i(s_j)||^2 / (2 sigma^2)); the box grows by
// box_growth_factor until min_candidates latents are inside.
struct CandidateDistribution {
  std::vector<int> ids;
  std::vector<double> probs;  // normalized, aligned with ids
  double half_width = 0.0;    // box size actually used
};

CandidateDistribution lambda_candidates(const LinkageState& state,
                                        const LinkageData& data,
                                        const GridIndex& index, int record,
                                        const SamplerConfig& config);

void update_lambda(LinkageState& state, const LinkageData& data,
                   const std::array<GridIndex, 2>& index_by_file,
                   const SamplerConfig& config, Rng& rng);

void update_s(LinkageState& state, const LinkageData& data, Rng& rng);

void update_sigma2(LinkageState& state, const LinkageData& data,
                   const LinkagePriors& priors, Rng& rng);

void update_translation(LinkageState& state, const LinkageData& data,
                        const LinkagePriors& priors, Rng& rng);

// One random-walk Metropolis step on theta_2; returns true on acceptance.
bool update_theta(LinkageState& state, const LinkageData& data,
                  const LinkagePriors& priors, double step, Rng& rng);

LinkagePosterior run_gibbs(const RecordSet& records, const Domain& domain,
                           const LinkagePriors& priors, const SamplerConfig& config);

// Row-major n x n matrix of co-clustering frequencies over retained draws;
// diagonal entries are 1.
std::vector<double> posterior_similarity(const LinkagePosterior& posterior);

}  // namespace treelink
