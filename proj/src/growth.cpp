#include "treelink/growth.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

#include "treelink/competition.hpp"
#include "treelink/rng.hpp"

namespace treelink {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

std::vector<Cluster> derive_clusters(std::span<const int> lambda,
                                     const RecordSet& records) {
  if (static_cast<int>(lambda.size()) != records.total()) {
    throw Error(ErrorCode::ValidationError, "lambda length differs from record count");
  }
  std::map<int, Cluster> by_latent;
  const int n1 = records.n1();
  for (int g = 0; g < static_cast<int>(lambda.size()); ++g) {
    Cluster& c = by_latent[lambda[g]];
    c.latent = lambda[g];
    if (g < n1) {
      c.members.push_back({1, g});
    } else {
      c.members.push_back({2, g - n1});
    }
  }
  std::vector<Cluster> out;
  out.reserve(by_latent.size());
  for (auto& [latent, cluster] : by_latent) out.push_back(std::move(cluster));
  return out;
}

std::vector<GrowthCluster> derive_growth_clusters(const std::vector<Cluster>& partition,
                                                  const RecordSet& records,
                                                  std::span<const Point2> s,
                                                  double r1, double r2) {
  if (!(0.0 < r1 && r1 < r2)) {
    throw Error(ErrorCode::InvalidConfig, "growth bounds require 0 < r1 < r2");
  }
  const double years = records.years_span();
  if (!(years > 0.0)) {
    throw Error(ErrorCode::ValidationError, "file years must be strictly increasing");
  }
  std::vector<GrowthCluster> out;
  for (const Cluster& c : partition) {
    GrowthCluster gc;
    gc.cluster_id = c.latent;
    for (const RecordRef& m : c.members) {
      const Record& rec = records.file(m.file_index).records[m.position];
      if (m.file_index == 1) {
        gc.v_first += rec.volume;
        gc.file1_members.push_back(m.position);
      } else {
        gc.v_last += rec.volume;
        gc.file2_members.push_back(m.position);
      }
    }
    if (gc.file1_members.empty() || gc.file2_members.empty()) continue;
    if (!(r1 * gc.v_first < gc.v_last && gc.v_last < r2 * gc.v_first)) continue;
    gc.years_span = years;
    gc.g = (gc.v_last - gc.v_first) / years;
    if (c.latent >= 0 && c.latent < static_cast<int>(s.size())) {
      gc.latent_location = s[c.latent];
    }
    out.push_back(std::move(gc));
  }
  return out;
}

void apply_boundary_buffer(std::vector<GrowthCluster>& clusters,
                           const Domain& domain, double buffer) {
  if (buffer < 0.0) throw Error(ErrorCode::InvalidConfig, "boundary buffer must be >= 0");
  if (buffer == 0.0) return;
  const Domain inner{domain.xmin + buffer, domain.ymin + buffer,
                     domain.xmax - buffer, domain.ymax - buffer};
  inner.validate();
  std::erase_if(clusters, [&](const GrowthCluster& c) {
    return !inner.contains(c.latent_location);
  });
}

void fill_locations_from_file1(std::vector<GrowthCluster>& clusters,
                               const RecordSet& records) {
  for (GrowthCluster& c : clusters) {
    if (c.file1_members.empty()) continue;
    Point2 sum{};
    for (int pos : c.file1_members) sum = sum + records.first.records[pos].loc;
    c.latent_location = (1.0 / c.file1_members.size()) * sum;
  }
}

void attach_covariates(std::vector<GrowthCluster>& clusters,
                       const std::vector<Raster>& standardized,
                       const RecordSet& records, const CovariateOptions& options) {
  std::vector<CompetitionMetrics> metrics;
  if (options.use_competition) {
    metrics = competition_metrics(records.first, options.competition_radius);
  }
  std::vector<GrowthCluster> kept;
  kept.reserve(clusters.size());
  for (GrowthCluster& c : clusters) {
    c.covariates.clear();
    c.covariates.push_back(1.0);
    for (const Raster& r : standardized) {
      c.covariates.push_back(sample_raster(r, c.latent_location));
    }
    if (options.use_competition) {
      // Representative: the largest-volume file-1 member (dominant crown).
      int rep = -1;
      double best = -1.0;
      for (int pos : c.file1_members) {
        const double v = records.first.records[pos].volume;
        if (v > best) {
          best = v;
          rep = pos;
        }
      }
      if (rep < 0 || !metrics[rep].has_neighbors) continue;
      c.covariates.push_back(metrics[rep].rsi);
      c.covariates.push_back(metrics[rep].lnv);
      c.covariates.push_back(metrics[rep].nd);
    }
    kept.push_back(std::move(c));
  }
  clusters = std::move(kept);
}

double GrowthParams::dot_beta(std::span<const double> x) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < beta.size(); ++i) acc += beta[i] * x[i];
  return acc;
}

double mm_mean(const GrowthParams& params, std::span<const double> x, double v_first) {
  if (!(v_first > 0.0)) {
    throw Error(ErrorCode::ValidationError, "mm_mean requires v_first > 0");
  }
  const double va = std::pow(v_first, params.alpha);
  const double ga = std::pow(params.gamma, params.alpha);
  return params.dot_beta(x) * va / (ga + va);
}

double growth_loglik(const GrowthParams& params,
                     const std::vector<GrowthCluster>& clusters,
                     ErrorFamily family) {
  if (clusters.empty()) throw Error(ErrorCode::EmptyInput, "no growth clusters");
  if (!(params.tau > 0.0) || !(params.gamma > 0.0)) return kNegInf;
  if (family == ErrorFamily::SkewT &&
      (!(params.omega > 2.0) || !(std::abs(params.delta) < 1.0))) {
    return kNegInf;
  }
  double total = 0.0;
  for (const GrowthCluster& c : clusters) {
    const double mu = mm_mean(params, c.covariates, c.v_first);
    total += family == ErrorFamily::Gaussian
                 ? normal_logpdf(c.g, mu, params.tau)
                 : skewt_logpdf(c.g, mu, params.tau, params.delta, params.omega);
  }
  return std::isfinite(total) ? total : kNegInf;
}

void GrowthPriors::resolve(int beta_dim) {
  if (mu_beta.empty()) mu_beta.assign(beta_dim, 0.0);
  if (sigma2_beta.empty()) sigma2_beta.assign(beta_dim, 100.0);
  if (static_cast<int>(mu_beta.size()) != beta_dim ||
      static_cast<int>(sigma2_beta.size()) != beta_dim) {
    throw Error(ErrorCode::InvalidConfig,
                "beta prior vectors must match the covariate dimension");
  }
  validate();
}

void GrowthPriors::validate() const {
  if (!(a_gamma < b_gamma) || !(a_gamma > 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "need 0 < a_gamma < b_gamma");
  }
  if (!(c_alpha < d_alpha) || !(c_alpha > 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "need 0 < c_alpha < d_alpha");
  }
  if (!(a_alpha > 0.0) || !(b_alpha > 0.0) || !(b_tau > 0.0) ||
      !(sigma2_delta > 0.0) || !(b_omega > 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "growth prior scale parameters must be positive");
  }
  for (double v : sigma2_beta) {
    if (!(v > 0.0)) throw Error(ErrorCode::InvalidConfig, "sigma2_beta must be positive");
  }
}

double growth_log_prior(const GrowthParams& params, const GrowthPriors& priors) {
  if (params.gamma <= priors.a_gamma || params.gamma >= priors.b_gamma) return kNegInf;
  if (params.alpha <= priors.c_alpha || params.alpha >= priors.d_alpha) return kNegInf;
  if (params.tau <= 0.0 || params.tau >= priors.b_tau) return kNegInf;

  double lp = 0.0;
  // gamma ~ Uniform(a_gamma, b_gamma): constant on the support.
  const double u_alpha = (params.alpha - priors.c_alpha) / (priors.d_alpha - priors.c_alpha);
  lp += (priors.a_alpha - 1.0) * std::log(u_alpha) +
        (priors.b_alpha - 1.0) * std::log1p(-u_alpha);
  for (std::size_t k = 0; k < params.beta.size(); ++k) {
    lp += normal_logpdf(params.beta[k], priors.mu_beta[k], priors.sigma2_beta[k]);
  }
  if (priors.error_family == ErrorFamily::SkewT) {
    if (std::abs(params.delta) >= 1.0 || params.omega <= 2.0) return kNegInf;
    lp += -params.delta * params.delta / (2.0 * priors.sigma2_delta);
    // omega = 2 + Gamma(2, b_omega), so density in (omega - 2).
    const double w = params.omega - 2.0;
    lp += std::log(w) - w / priors.b_omega;
  }
  return lp;
}

void GrowthMcmcConfig::validate() const {
  if (iterations <= 0 || burnin < 0 || burnin >= iterations || thin <= 0) {
    throw Error(ErrorCode::InvalidConfig, "need 0 <= burnin < iterations and thin > 0");
  }
}

std::vector<std::string> GrowthPosterior::param_names() const {
  std::vector<std::string> names;
  names.push_back("alpha");
  for (int k = 0; k < beta_dim; ++k) names.push_back("beta" + std::to_string(k));
  names.push_back("gamma");
  names.push_back("tau");
  if (family == ErrorFamily::SkewT) {
    names.push_back("delta");
    names.push_back("omega");
  }
  return names;
}

std::vector<double> GrowthPosterior::flatten(const GrowthParams& p) const {
  std::vector<double> row;
  row.push_back(p.alpha);
  row.insert(row.end(), p.beta.begin(), p.beta.end());
  row.push_back(p.gamma);
  row.push_back(p.tau);
  if (family == ErrorFamily::SkewT) {
    row.push_back(p.delta);
    row.push_back(p.omega);
  }
  return row;
}

namespace {

// Bijections between the constrained parameters and the unconstrained
// proposal space, with log |d constrained / d unconstrained| terms.

double logit_interval(double x, double lo, double hi) {
  return std::log((x - lo) / (hi - x));
}

double inv_logit_interval(double u, double lo, double hi) {
  const double e = 1.0 / (1.0 + std::exp(-u));
  return lo + (hi - lo) * e;
}

double log_jacobian_interval(double u, double lo, double hi) {
  // d/du [lo + (hi-lo) sigmoid(u)] = (hi-lo) sigmoid(u) (1 - sigmoid(u))
  const double e = 1.0 / (1.0 + std::exp(-u));
  return std::log(hi - lo) + std::log(e) + std::log1p(-e);
}

struct BlockSpec {
  std::vector<int> param_ids;  // indices into the unconstrained vector
};

class GrowthModel {
 public:
  GrowthModel(const std::vector<GrowthCluster>& clusters, const GrowthPriors& priors,
              bool prior_only, int beta_dim)
      : clusters_(clusters), priors_(priors), prior_only_(prior_only), beta_dim_(beta_dim) {}

  int dim() const {
    return beta_dim_ + 3 + (priors_.error_family == ErrorFamily::SkewT ? 2 : 0);
  }

  // Unconstrained layout: [beta..., u_gamma, u_alpha, u_tau, (u_delta, u_omega)].
  GrowthParams unpack(const Eigen::VectorXd& u) const {
    GrowthParams p;
    p.beta.assign(u.data(), u.data() + beta_dim_);
    p.gamma = inv_logit_interval(u[beta_dim_], priors_.a_gamma, priors_.b_gamma);
    p.alpha = inv_logit_interval(u[beta_dim_ + 1], priors_.c_alpha, priors_.d_alpha);
    p.tau = inv_logit_interval(u[beta_dim_ + 2], 0.0, priors_.b_tau);
    if (priors_.error_family == ErrorFamily::SkewT) {
      p.delta = inv_logit_interval(u[beta_dim_ + 3], -1.0, 1.0);
      p.omega = 2.0 + std::exp(u[beta_dim_ + 4]);
    }
    return p;
  }

  Eigen::VectorXd pack(const GrowthParams& p) const {
    Eigen::VectorXd u(dim());
    for (int k = 0; k < beta_dim_; ++k) u[k] = p.beta[k];
    u[beta_dim_] = logit_interval(p.gamma, priors_.a_gamma, priors_.b_gamma);
    u[beta_dim_ + 1] = logit_interval(p.alpha, priors_.c_alpha, priors_.d_alpha);
    u[beta_dim_ + 2] = logit_interval(p.tau, 0.0, priors_.b_tau);
    if (priors_.error_family == ErrorFamily::SkewT) {
      u[beta_dim_ + 3] = logit_interval(p.delta, -1.0, 1.0);
      u[beta_dim_ + 4] = std::log(p.omega - 2.0);
    }
    return u;
  }

  double log_target(const Eigen::VectorXd& u) const {
    const GrowthParams p = unpack(u);
    double lt = growth_log_prior(p, priors_);
    if (!std::isfinite(lt)) return kNegInf;
    lt += log_jacobian_interval(u[beta_dim_], priors_.a_gamma, priors_.b_gamma);
    lt += log_jacobian_interval(u[beta_dim_ + 1], priors_.c_alpha, priors_.d_alpha);
    lt += log_jacobian_interval(u[beta_dim_ + 2], 0.0, priors_.b_tau);
    if (priors_.error_family == ErrorFamily::SkewT) {
      lt += log_jacobian_interval(u[beta_dim_ + 3], -1.0, 1.0);
      lt += u[beta_dim_ + 4];  // d omega / d u = exp(u)
    }
    if (!prior_only_) lt += growth_loglik(p, clusters_, priors_.error_family);
    return lt;
  }

 private:
  const std::vector<GrowthCluster>& clusters_;
  const GrowthPriors& priors_;
  bool prior_only_;
  int beta_dim_;
};

// Haario-style adaptive proposal for one block: empirical covariance of the
// burn-in history plus a Robbins-Monro global scale aiming at ~30% acceptance.
// While the chain has not moved the empirical covariance is zero; keeping the
// identity shape until then leaves the scalar scale free to recover instead
// of freezing the block.
class BlockProposal {
 public:
  explicit BlockProposal(int d) : d_(d), mean_(Eigen::VectorXd::Zero(d)),
                                  chol_(Eigen::MatrixXd::Identity(d, d)) {}

  void observe(const Eigen::VectorXd& x) {
    ++count_;
    const double w = 1.0 / count_;
    const Eigen::VectorXd diff = x - mean_;
    mean_ += w * diff;
    cov_moment_ += diff * (x - mean_).transpose();
  }

  void refresh() {
    if (count_ < 2 * d_ + 10) return;
    const Eigen::MatrixXd emp = cov_moment_ / (count_ - 1);
    const double mean_diag = emp.trace() / d_;
    if (!(mean_diag > 0.0)) return;
    const Eigen::MatrixXd cov =
        emp + (1e-6 * mean_diag) * Eigen::MatrixXd::Identity(d_, d_);
    chol_ = Eigen::LLT<Eigen::MatrixXd>(cov).matrixL();
  }

  void adapt_scale(double acceptance_rate) {
    log_scale_ += 0.6 * (acceptance_rate - 0.30);
    log_scale_ = std::clamp(log_scale_, -15.0, 6.0);
  }

  Eigen::VectorXd propose(const Eigen::VectorXd& current, Rng& rng) const {
    Eigen::VectorXd z(d_);
    for (int i = 0; i < d_; ++i) z[i] = rng.normal();
    const double scale = std::exp(log_scale_) * 2.38 / std::sqrt(static_cast<double>(d_));
    return current + scale * (chol_ * z);
  }

 private:
  int d_;
  long count_ = 0;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_moment_ = Eigen::MatrixXd::Zero(d_, d_);
  Eigen::MatrixXd chol_;
  double log_scale_ = std::log(0.05);
};

}  // namespace

GrowthPosterior fit_growth(const std::vector<GrowthCluster>& clusters,
                           const GrowthPriors& priors_in, const GrowthMcmcConfig& config) {
  config.validate();
  GrowthPriors priors = priors_in;
  int beta_dim;
  if (!clusters.empty()) {
    beta_dim = static_cast<int>(clusters.front().covariates.size());
    for (const GrowthCluster& c : clusters) {
      if (static_cast<int>(c.covariates.size()) != beta_dim) {
        throw Error(ErrorCode::ValidationError, "inconsistent covariate dimensions");
      }
    }
  } else if (!priors.mu_beta.empty()) {
    beta_dim = static_cast<int>(priors.mu_beta.size());
  } else {
    throw Error(ErrorCode::EmptyInput,
                "no clusters and no beta prior dimension to fit against");
  }
  priors.resolve(beta_dim);
  if (!config.prior_only &&
      static_cast<int>(clusters.size()) < beta_dim + 2) {
    throw Error(ErrorCode::ValidationError,
                "need at least p + 2 growth clusters, got " +
                    std::to_string(clusters.size()));
  }

  GrowthModel model(clusters, priors, config.prior_only, beta_dim);
  Rng rng(config.seed);

  // Starting point: prior midpoints, beta0 roughly matched to the mean growth.
  GrowthParams start;
  start.beta.assign(beta_dim, 0.0);
  for (int k = 0; k < beta_dim; ++k) start.beta[k] = priors.mu_beta[k];
  start.gamma = 0.5 * (priors.a_gamma + priors.b_gamma);
  const double alpha_pad = 1e-3 * (priors.d_alpha - priors.c_alpha);
  start.alpha = std::clamp(1.0, priors.c_alpha + alpha_pad, priors.d_alpha - alpha_pad);
  start.tau = 0.5 * priors.b_tau;
  start.delta = 0.0;
  start.omega = 2.0 + 2.0 * priors.b_omega;
  if (!config.prior_only && !clusters.empty()) {
    // Start gamma at the median initial volume: the half-saturation scale the
    // data actually span, which is far closer to the posterior than the
    // midpoint of a diffuse prior range.
    std::vector<double> volumes;
    volumes.reserve(clusters.size());
    for (const GrowthCluster& c : clusters) volumes.push_back(c.v_first);
    std::sort(volumes.begin(), volumes.end());
    const double gamma_pad = 1e-3 * (priors.b_gamma - priors.a_gamma);
    start.gamma = std::clamp(volumes[volumes.size() / 2], priors.a_gamma + gamma_pad,
                             priors.b_gamma - gamma_pad);

    double g_sum = 0.0, g_sq = 0.0, h_sum = 0.0;
    for (const GrowthCluster& c : clusters) {
      g_sum += c.g;
      g_sq += c.g * c.g;
      const double va = std::pow(c.v_first, start.alpha);
      h_sum += va / (std::pow(start.gamma, start.alpha) + va);
    }
    const double n = static_cast<double>(clusters.size());
    const double g_var = std::max(1e-8, g_sq / n - (g_sum / n) * (g_sum / n));
    start.tau = std::clamp(g_var, 1e-6, 0.999 * priors.b_tau);
    if (h_sum > 0.0 && priors.mu_beta[0] == 0.0) {
      start.beta[0] = (g_sum / n) / (h_sum / n);
    }
  }

  Eigen::VectorXd current = model.pack(start);
  double current_lt = model.log_target(current);
  if (!std::isfinite(current_lt)) {
    throw Error(ErrorCode::NumericalFailure, "non-finite log target at the start state");
  }

  // Blocks: beta | (gamma, alpha) | error parameters.
  std::vector<BlockSpec> blocks;
  {
    BlockSpec beta_block;
    for (int k = 0; k < beta_dim; ++k) beta_block.param_ids.push_back(k);
    blocks.push_back(beta_block);
    blocks.push_back({{beta_dim, beta_dim + 1}});
    BlockSpec error_block{{beta_dim + 2}};
    if (priors.error_family == ErrorFamily::SkewT) {
      error_block.param_ids.push_back(beta_dim + 3);
      error_block.param_ids.push_back(beta_dim + 4);
    }
    blocks.push_back(error_block);
  }

  std::vector<BlockProposal> proposals;
  std::vector<long> accepts(blocks.size(), 0);
  std::vector<long> attempts(blocks.size(), 0);
  std::vector<long> window_accepts(blocks.size(), 0);
  std::vector<long> window_attempts(blocks.size(), 0);
  for (const auto& b : blocks) proposals.emplace_back(static_cast<int>(b.param_ids.size()));

  GrowthPosterior posterior;
  posterior.family = priors.error_family;
  posterior.beta_dim = beta_dim;
  posterior.draws.reserve(
      static_cast<std::size_t>((config.iterations - config.burnin) / config.thin));

  for (int iter = 0; iter < config.iterations; ++iter) {
    const bool adapting = iter < config.burnin;
    for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
      const auto& ids = blocks[bi].param_ids;
      Eigen::VectorXd sub(static_cast<int>(ids.size()));
      for (std::size_t k = 0; k < ids.size(); ++k) sub[static_cast<int>(k)] = current[ids[k]];
      const Eigen::VectorXd sub_prop = proposals[bi].propose(sub, rng);
      Eigen::VectorXd candidate = current;
      for (std::size_t k = 0; k < ids.size(); ++k) candidate[ids[k]] = sub_prop[static_cast<int>(k)];
      const double cand_lt = model.log_target(candidate);
      ++attempts[bi];
      ++window_attempts[bi];
      const double u = rng.uniform();
      if (std::isfinite(cand_lt) &&
          std::log(std::max(u, 1e-300)) < cand_lt - current_lt) {
        current = candidate;
        current_lt = cand_lt;
        ++accepts[bi];
        ++window_accepts[bi];
      }
      if (adapting) {
        Eigen::VectorXd observed(static_cast<int>(ids.size()));
        for (std::size_t k = 0; k < ids.size(); ++k) observed[static_cast<int>(k)] = current[ids[k]];
        proposals[bi].observe(observed);
        if (window_attempts[bi] >= 25) {
          proposals[bi].adapt_scale(static_cast<double>(window_accepts[bi]) /
                                    window_attempts[bi]);
          proposals[bi].refresh();
          window_accepts[bi] = 0;
          window_attempts[bi] = 0;
        }
      }
    }
    if (iter + 1 == config.burnin) {
      for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
        if (attempts[bi] > 0 &&
            static_cast<double>(accepts[bi]) / attempts[bi] < 0.01) {
          throw PoorMixingError(
              "block " + std::to_string(bi) + " acceptance below 1% during burn-in",
              posterior);
        }
      }
    }
    if (iter >= config.burnin && (iter - config.burnin) % config.thin == config.thin - 1) {
      posterior.draws.push_back(model.unpack(current));
    }
  }

  posterior.block_acceptance.resize(blocks.size());
  for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
    posterior.block_acceptance[bi] =
        attempts[bi] > 0 ? static_cast<double>(accepts[bi]) / attempts[bi] : 0.0;
  }
  return posterior;
}

}  // namespace treelink
