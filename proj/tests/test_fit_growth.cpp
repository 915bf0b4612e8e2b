#include <doctest.h>

#include <cmath>

#include "treelink/growth.hpp"
#include "treelink/rng.hpp"

#include "helpers.hpp"

using namespace treelink;
namespace tt = treelink::testing;

namespace {

// Clusters drawn from the generating model used throughout the simulation
// study: lognormal sizes, standard-normal covariates, gaussian errors.
std::vector<GrowthCluster> simulated_clusters(int n, const GrowthParams& truth,
                                              std::uint64_t seed) {
  Rng rng(seed);
  std::vector<GrowthCluster> cs(n);
  for (auto& c : cs) {
    c.v_first = std::exp(rng.normal(std::log(30.0), 0.55));
    c.covariates = {1.0};
    for (std::size_t k = 1; k < truth.beta.size(); ++k) c.covariates.push_back(rng.normal());
    c.g = mm_mean(truth, c.covariates, c.v_first) +
          rng.normal(0.0, std::sqrt(truth.tau));
  }
  return cs;
}

GrowthParams paper_truth() {
  GrowthParams p;
  p.alpha = 1.0;
  p.gamma = 12.0;
  p.beta = {3.0, 0.5, -0.5, 0.5, -0.5};
  p.tau = 0.5;
  return p;
}

std::vector<double> column(const GrowthPosterior& post, const std::string& name) {
  const auto names = post.param_names();
  const auto it = std::find(names.begin(), names.end(), name);
  REQUIRE(it != names.end());
  const std::size_t idx = static_cast<std::size_t>(it - names.begin());
  std::vector<double> out;
  out.reserve(post.draws.size());
  for (const auto& d : post.draws) out.push_back(post.flatten(d)[idx]);
  return out;
}

}  // namespace

TEST_CASE("fit_growth recovers the generating coefficients") {
  const GrowthParams truth = paper_truth();
  const auto clusters = simulated_clusters(1000, truth, 7);
  GrowthPriors priors;
  priors.b_gamma = 120.0;
  priors.error_family = ErrorFamily::Gaussian;
  GrowthMcmcConfig config;
  config.iterations = 9000;
  config.burnin = 4000;
  config.thin = 5;
  config.seed = 11;
  const GrowthPosterior post = fit_growth(clusters, priors, config);
  REQUIRE(post.draws.size() == 1000);

  const auto names = post.param_names();
  const std::vector<double> expected = {truth.alpha, 3.0, 0.5, -0.5, 0.5, -0.5,
                                        truth.gamma, truth.tau};
  for (std::size_t k = 0; k < truth.beta.size(); ++k) {
    const auto col = column(post, "beta" + std::to_string(k));
    const double mean = tt::mean(col);
    const double sd = std::sqrt(tt::sample_variance(col));
    INFO("beta", k, ": mean ", mean, " sd ", sd);
    CHECK(std::abs(mean - truth.beta[k]) < 3.0 * sd);
  }
  const auto tau_col = column(post, "tau");
  CHECK(std::abs(tt::mean(tau_col) - truth.tau) < 4.0 * std::sqrt(tt::sample_variance(tau_col)));
}

TEST_CASE("near-zero noise concentrates beta0 at the least-squares value") {
  // gamma and alpha pinned by a tight prior so beta0 is the only free mean
  // parameter; the data are an almost exact Michaelis-Menten curve.
  Rng rng(13);
  GrowthParams truth;
  truth.alpha = 1.0;
  truth.gamma = 12.0;
  truth.beta = {2.0};
  truth.tau = 1e-6;
  std::vector<GrowthCluster> cs(100);
  for (auto& c : cs) {
    c.v_first = rng.uniform(4.0, 60.0);
    c.covariates = {1.0};
    c.g = mm_mean(truth, c.covariates, c.v_first) + rng.normal(0.0, 1e-3);
  }
  double num = 0.0, den = 0.0;
  for (const auto& c : cs) {
    const double h = c.v_first / (12.0 + c.v_first);
    num += h * c.g;
    den += h * h;
  }
  const double least_squares = num / den;

  GrowthPriors priors;
  priors.a_gamma = 11.9999;
  priors.b_gamma = 12.0001;
  priors.c_alpha = 0.9999;
  priors.d_alpha = 1.0001;
  priors.b_tau = 1.0;
  GrowthMcmcConfig config;
  config.iterations = 8000;
  config.burnin = 5000;
  config.thin = 3;
  config.seed = 17;
  const GrowthPosterior post = fit_growth(cs, priors, config);
  const auto b0 = column(post, "beta0");
  CHECK(std::sqrt(tt::sample_variance(b0)) < 0.01);
  CHECK(std::abs(tt::mean(b0) - least_squares) < 0.01);
}

TEST_CASE("prior-only runs recover the uniform prior on gamma") {
  GrowthPriors priors;
  priors.a_gamma = 4.0;
  priors.b_gamma = 24.0;
  priors.mu_beta = {0.0};
  priors.sigma2_beta = {4.0};
  priors.b_tau = 2.0;
  GrowthMcmcConfig config;
  config.iterations = 60000;
  config.burnin = 5000;
  config.thin = 5;
  config.seed = 19;
  config.prior_only = true;
  const GrowthPosterior post = fit_growth({}, priors, config);
  auto gamma = column(post, "gamma");
  std::sort(gamma.begin(), gamma.end());
  for (double q : {0.1, 0.25, 0.5, 0.75, 0.9}) {
    const double expected = priors.a_gamma + q * (priors.b_gamma - priors.a_gamma);
    const double actual = gamma[static_cast<std::size_t>(q * gamma.size())];
    CHECK(std::abs(actual - expected) < 0.02 * (priors.b_gamma - priors.a_gamma));
  }
}

TEST_CASE("identical seeds give bit-identical chains") {
  const auto clusters = simulated_clusters(120, paper_truth(), 23);
  GrowthPriors priors;
  priors.b_gamma = 120.0;
  GrowthMcmcConfig config;
  config.iterations = 1200;
  config.burnin = 600;
  config.thin = 3;
  config.seed = 29;
  const GrowthPosterior a = fit_growth(clusters, priors, config);
  const GrowthPosterior b = fit_growth(clusters, priors, config);
  REQUIRE(a.draws.size() == b.draws.size());
  for (std::size_t d = 0; d < a.draws.size(); ++d) {
    CHECK(a.draws[d].alpha == b.draws[d].alpha);
    CHECK(a.draws[d].beta == b.draws[d].beta);
    CHECK(a.draws[d].gamma == b.draws[d].gamma);
    CHECK(a.draws[d].tau == b.draws[d].tau);
  }
}

TEST_CASE("four chains mix to a Gelman-Rubin statistic below 1.05") {
  const auto clusters = simulated_clusters(600, paper_truth(), 31);
  GrowthPriors priors;
  priors.b_gamma = 120.0;
  GrowthMcmcConfig config;
  config.iterations = 44000;
  config.burnin = 12000;
  config.thin = 8;

  std::vector<GrowthPosterior> chains;
  for (std::uint64_t seed : {37u, 41u, 43u, 47u}) {
    config.seed = seed;
    chains.push_back(fit_growth(clusters, priors, config));
  }
  for (const std::string& name : chains.front().param_names()) {
    std::vector<std::vector<double>> traces;
    for (const auto& chain : chains) traces.push_back(column(chain, name));
    const double rhat = tt::gelman_rubin(traces);
    INFO("parameter ", name, " rhat ", rhat);
    CHECK(rhat < 1.05);
  }
}

TEST_CASE("skew-t family fits and keeps delta and omega in support") {
  GrowthParams truth = paper_truth();
  truth.beta = {3.0, 0.5};
  const auto clusters = simulated_clusters(300, truth, 53);
  GrowthPriors priors;
  priors.b_gamma = 120.0;
  priors.error_family = ErrorFamily::SkewT;
  GrowthMcmcConfig config;
  config.iterations = 4000;
  config.burnin = 2000;
  config.thin = 4;
  config.seed = 59;
  const GrowthPosterior post = fit_growth(clusters, priors, config);
  REQUIRE(post.draws.size() == 500);
  for (const auto& d : post.draws) {
    CHECK(std::abs(d.delta) < 1.0);
    CHECK(d.omega > 2.0);
    CHECK(d.tau > 0.0);
  }
  // Gaussian data: the skewness posterior should straddle zero.
  const auto delta_col = column(post, "delta");
  CHECK(std::abs(tt::mean(delta_col)) < 0.5);
}

TEST_CASE("a frozen likelihood raises PoorMixing with the partial trace") {
  // Covariates so large that any nonzero beta proposal overflows the mean:
  // every beta-block proposal is rejected.
  std::vector<GrowthCluster> cs(5);
  for (auto& c : cs) {
    c.v_first = 20.0;
    c.covariates = {1e160};
    c.g = 0.0;
  }
  GrowthPriors priors;
  priors.mu_beta = {0.0};
  priors.sigma2_beta = {1.0};
  GrowthMcmcConfig config;
  config.iterations = 400;
  config.burnin = 200;
  config.seed = 61;
  CHECK_THROWS_AS(fit_growth(cs, priors, config), PoorMixingError);
}

TEST_CASE("too few clusters is a validation error") {
  const auto clusters = simulated_clusters(3, paper_truth(), 67);
  GrowthPriors priors;
  priors.b_gamma = 120.0;
  GrowthMcmcConfig config;
  CHECK_THROWS_AS(fit_growth(clusters, priors, config), Error);
}
