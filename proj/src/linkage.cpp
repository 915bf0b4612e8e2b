#include "treelink/linkage.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <string>

#include "treelink/distributions.hpp"
#include "treelink/errors.hpp"

namespace treelink {

int latent_count(int n1, int n2, double q) {
  if (n1 < 0 || n2 < 0 || !(q > 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "latent_count requires n1, n2 >= 0 and q > 0");
  }
  if (n1 + n2 == 0) throw Error(ErrorCode::EmptyInput, "both files are empty");
  const int scaled = static_cast<int>(std::ceil(q * std::max(n1, n2)));
  return std::min(scaled, n1 + n2);
}

void LinkagePriors::validate() const {
  if (!(c_sigma > 0.0) || !(d_sigma > 0.0) || !(b_sigma > 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "sigma^2 prior parameters must be positive");
  }
  if (!(kappa > 0.0) || !(sigma2_t > 0.0) || !(q > 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "kappa, sigma2_t and q must be positive");
  }
  if (!(b_theta > 0.0) || b_theta > 3.14159265358979323846) {
    throw Error(ErrorCode::InvalidConfig, "b_theta must lie in (0, pi]");
  }
}

void SamplerConfig::validate() const {
  if (iterations <= 0 || burnin < 0 || burnin >= iterations || thin <= 0) {
    throw Error(ErrorCode::InvalidConfig, "need 0 <= burnin < iterations and thin > 0");
  }
  if (!(box_half_width > 0.0) || min_candidates < 2 || !(box_growth_factor > 1.0)) {
    throw Error(ErrorCode::InvalidConfig,
                "need box_half_width > 0, min_candidates >= 2, box_growth_factor > 1");
  }
  if (latent_domain_margin < 0.0 || !(theta_step > 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "latent_domain_margin >= 0 and theta_step > 0");
  }
}

LinkageData LinkageData::build(const RecordSet& records, const Domain& domain,
                               double latent_margin) {
  domain.validate();
  LinkageData data;
  data.n1 = records.n1();
  data.n2 = records.n2();
  data.loc.reserve(records.total());
  data.volume.reserve(records.total());
  for (const RecordFile* file : {&records.first, &records.second}) {
    for (const Record& r : file->records) {
      data.loc.push_back(r.loc);
      data.volume.push_back(r.volume);
    }
  }
  data.domain = domain;
  data.latent_domain = expand_domain(domain, latent_margin);
  data.mu_d = domain.midpoint();
  return data;
}

void LinkageState::check_invariants(const LinkageData& data,
                                    const LinkagePriors& priors) const {
  const int latents = static_cast<int>(s.size());
  if (static_cast<int>(lambda.size()) != data.n()) {
    throw Error(ErrorCode::ValidationError, "lambda length differs from record count");
  }
  for (int l : lambda) {
    if (l < 0 || l >= latents) {
      throw Error(ErrorCode::ValidationError, "lambda entry outside latent range");
    }
  }
  if (!(sigma2 > 0.0) || sigma2 > priors.b_sigma) {
    throw Error(ErrorCode::ValidationError, "sigma2 outside (0, b_sigma]");
  }
  if (theta[0] != 0.0 || !(t[0] == Point2{})) {
    throw Error(ErrorCode::ValidationError, "file 1 transform must stay fixed");
  }
  if (std::abs(theta[1]) >= priors.b_theta && theta[1] != 0.0) {
    throw Error(ErrorCode::ValidationError, "theta outside truncation bound");
  }
  for (const Point2& p : s) {
    if (!data.latent_domain.contains(p)) {
      throw Error(ErrorCode::ValidationError, "latent location outside D*");
    }
  }
}

LinkageState init_state(const LinkageData& data, int latents,
                        const LinkagePriors& priors, Rng& rng) {
  const int n = data.n();
  if (n == 0) throw Error(ErrorCode::EmptyInput, "no records");
  LinkageState state;
  state.s.reserve(latents);

  // Latent seeds: a random subsample of observed locations, padded with
  // uniform draws on D* when N > n. Observed locations outside D* (possible
  // only with a degenerate configured domain) are clamped.
  const auto subsample = rng.sample_without_replacement(
      static_cast<std::size_t>(n), static_cast<std::size_t>(std::min(latents, n)));
  for (std::size_t idx : subsample) {
    state.s.push_back(data.latent_domain.clamp(data.loc[idx]));
  }
  while (static_cast<int>(state.s.size()) < latents) {
    state.s.push_back({rng.uniform(data.latent_domain.xmin, data.latent_domain.xmax),
                       rng.uniform(data.latent_domain.ymin, data.latent_domain.ymax)});
  }

  // Each record links to its nearest seed.
  state.lambda.resize(n);
  for (int g = 0; g < n; ++g) {
    double best = std::numeric_limits<double>::infinity();
    int best_j = 0;
    for (int j = 0; j < latents; ++j) {
      const double d2 = squared_norm(data.loc[g] - state.s[j]);
      if (d2 < best) {
        best = d2;
        best_j = j;
      }
    }
    state.lambda[g] = best_j;
  }

  state.sigma2 = std::min(inv_gamma_median(priors.c_sigma, priors.d_sigma), priors.b_sigma);
  state.theta = {0.0, 0.0};
  state.t = {Point2{}, Point2{}};
  return state;
}

CandidateDistribution lambda_candidates(const LinkageState& state,
                                        const LinkageData& data,
                                        const GridIndex& index, int record,
                                        const SamplerConfig& config) {
  const Point2 y = data.loc[record];
  const int file = data.file_of(record);
  const RigidTransform tr = state.transform(data, file);

  double half_width = config.box_half_width;
  std::vector<int> ids = index.query_box(y, half_width);
  const double limit = 2.0 * data.latent_domain.diagonal();
  while (static_cast<int>(ids.size()) < config.min_candidates) {
    if (half_width > limit) {
      throw Error(ErrorCode::CandidateSearchFailed,
                  "candidate box exceeded the domain diagonal for record " +
                      std::to_string(record));
    }
    half_width *= config.box_growth_factor;
    ids = index.query_box(y, half_width);
  }

  CandidateDistribution out;
  out.ids = std::move(ids);
  out.half_width = half_width;
  out.probs.resize(out.ids.size());
  double min_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < out.ids.size(); ++k) {
    const double d2 = squared_norm(y - apply_transform(tr, state.s[out.ids[k]]));
    out.probs[k] = d2;
    min_d2 = std::min(min_d2, d2);
  }
  double total = 0.0;
  for (double& p : out.probs) {
    p = std::exp(-(p - min_d2) / (2.0 * state.sigma2));
    total += p;
  }
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw Error(ErrorCode::NumericalFailure, "degenerate candidate weights");
  }
  for (double& p : out.probs) p /= total;
  return out;
}

void update_lambda(LinkageState& state, const LinkageData& data,
                   const std::array<GridIndex, 2>& index_by_file,
                   const SamplerConfig& config, Rng& rng) {
  const int n = data.n();
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  if (config.random_scan) {
    const auto perm = rng.sample_without_replacement(static_cast<std::size_t>(n),
                                                     static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[i] = static_cast<int>(perm[i]);
  }
  for (int g : order) {
    const auto cand =
        lambda_candidates(state, data, index_by_file[data.file_of(g)], g, config);
    const std::size_t pick = rng.categorical(cand.probs);
    state.lambda[g] = cand.ids[pick];
  }
}

void update_s(LinkageState& state, const LinkageData& data, Rng& rng) {
  const int latents = static_cast<int>(state.s.size());
  std::vector<Point2> mean(latents, Point2{});
  std::vector<int> count(latents, 0);
  for (int g = 0; g < data.n(); ++g) {
    const int j = state.lambda[g];
    const RigidTransform tr = state.transform(data, data.file_of(g));
    mean[j] = mean[j] + invert_transform(tr, data.loc[g]);
    ++count[j];
  }

  const Domain& dstar = data.latent_domain;
  for (int j = 0; j < latents; ++j) {
    if (count[j] == 0) {
      state.s[j] = {rng.uniform(dstar.xmin, dstar.xmax),
                    rng.uniform(dstar.ymin, dstar.ymax)};
      continue;
    }
    const Point2 mu = (1.0 / count[j]) * mean[j];
    const double sd = std::sqrt(state.sigma2 / count[j]);
    bool placed = false;
    for (int attempt = 0; attempt < 1000; ++attempt) {
      const Point2 draw{rng.normal(mu.x, sd), rng.normal(mu.y, sd)};
      if (dstar.contains(draw)) {
        state.s[j] = draw;
        placed = true;
        break;
      }
    }
    if (!placed) {
      state.s[j] = dstar.clamp(mu);
      ++state.s_truncation_clamps;
    }
  }
}

void update_sigma2(LinkageState& state, const LinkageData& data,
                   const LinkagePriors& priors, Rng& rng) {
  double rss = 0.0;
  for (int g = 0; g < data.n(); ++g) {
    const RigidTransform tr = state.transform(data, data.file_of(g));
    rss += squared_norm(data.loc[g] - apply_transform(tr, state.s[state.lambda[g]]));
  }
  // Two coordinates per record contribute 2 * n/2 = n to the shape.
  const double shape = priors.c_sigma + data.n();
  const double scale = priors.d_sigma + 0.5 * rss;
  state.sigma2 = sample_truncated_inv_gamma(rng, shape, scale, priors.b_sigma);
}

void update_translation(LinkageState& state, const LinkageData& data,
                        const LinkagePriors& priors, Rng& rng) {
  if (priors.fix_translation[1]) return;
  if (data.n2 == 0) return;
  // Conjugate bivariate normal with isotropic precision n2/sigma^2 + 1/sigma_t^2.
  const RigidTransform rotate_only{state.theta[1], Point2{}, data.mu_d};
  Point2 residual_sum{};
  for (int g = data.n1; g < data.n(); ++g) {
    residual_sum =
        residual_sum + (data.loc[g] - apply_transform(rotate_only, state.s[state.lambda[g]]));
  }
  const double precision = data.n2 / state.sigma2 + 1.0 / priors.sigma2_t;
  const double var = 1.0 / precision;
  const Point2 mean = (var / state.sigma2) * residual_sum;
  const double sd = std::sqrt(var);
  state.t[1] = {rng.normal(mean.x, sd), rng.normal(mean.y, sd)};
}

bool update_theta(LinkageState& state, const LinkageData& data,
                  const LinkagePriors& priors, double step, Rng& rng) {
  if (priors.fix_theta[1]) return false;
  const double theta = state.theta[1];
  const double proposal = theta + rng.normal(0.0, step);
  if (std::abs(proposal) >= priors.b_theta) return false;

  // Likelihood depends on theta only through
  //   (1/sigma^2) [A cos(theta) + B sin(theta)]
  // with A = sum(y'.s'), B = sum(y'_y s'_x - y'_x s'_y) over file-2 records,
  // y' = y - t - mu_D and s' = s_lambda - mu_D.
  double a = 0.0, b = 0.0;
  for (int g = data.n1; g < data.n(); ++g) {
    const Point2 yp = data.loc[g] - state.t[1] - data.mu_d;
    const Point2 sp = state.s[state.lambda[g]] - data.mu_d;
    a += yp.x * sp.x + yp.y * sp.y;
    b += yp.y * sp.x - yp.x * sp.y;
  }
  const double delta_loglik =
      (a * (std::cos(proposal) - std::cos(theta)) +
       b * (std::sin(proposal) - std::sin(theta))) /
      state.sigma2;
  const double delta_logprior =
      priors.kappa * (std::cos(proposal - priors.nu) - std::cos(theta - priors.nu));
  const double log_ratio = delta_loglik + delta_logprior;
  const double u = rng.uniform();
  if (std::log(std::max(u, 1e-300)) < log_ratio) {
    state.theta[1] = proposal;
    return true;
  }
  return false;
}

LinkagePosterior run_gibbs(const RecordSet& records, const Domain& domain,
                           const LinkagePriors& priors, const SamplerConfig& config) {
  priors.validate();
  config.validate();
  if (records.total() == 0) throw Error(ErrorCode::EmptyInput, "no records");
  validate_records(records, &domain);

  LinkageData data = LinkageData::build(records, domain, config.latent_domain_margin);
  const int latents = latent_count(data.n1, data.n2, priors.q);

  Rng rng(config.seed);
  LinkageState state = init_state(data, latents, priors, rng);

  std::array<GridIndex, 2> grids{GridIndex(data.latent_domain, config.box_half_width),
                                 GridIndex(data.latent_domain, config.box_half_width)};
  std::vector<Point2> transformed(latents);

  LinkagePosterior posterior;
  posterior.n1 = data.n1;
  posterior.n2 = data.n2;
  posterior.latent_count = latents;
  posterior.iterations = config.iterations;
  posterior.burnin = config.burnin;
  posterior.thin = config.thin;
  posterior.seed = config.seed;
  posterior.iteration_seconds.reserve(config.iterations);
  posterior.draws.reserve(
      static_cast<std::size_t>((config.iterations - config.burnin) / config.thin));

  // Adapt the theta step toward ~40% acceptance during burn-in, then freeze.
  double theta_step = config.theta_step;
  int theta_accepts = 0;
  int theta_attempts = 0;

  for (int iter = 0; iter < config.iterations; ++iter) {
    const auto tic = std::chrono::steady_clock::now();

    grids[0].rebuild(state.s);
    const RigidTransform tr2 = state.transform(data, 1);
    for (int j = 0; j < latents; ++j) transformed[j] = apply_transform(tr2, state.s[j]);
    grids[1].rebuild(transformed);

    update_lambda(state, data, grids, config, rng);
    update_s(state, data, rng);
    update_sigma2(state, data, priors, rng);
    update_translation(state, data, priors, rng);
    if (!priors.fix_theta[1]) {
      theta_accepts += update_theta(state, data, priors, theta_step, rng) ? 1 : 0;
      ++theta_attempts;
      if (iter < config.burnin && theta_attempts % 50 == 0) {
        const double rate = static_cast<double>(theta_accepts) / theta_attempts;
        theta_step *= std::exp(0.5 * (rate - 0.40));
        theta_step = std::clamp(theta_step, 1e-7, priors.b_theta);
      }
    }

    if (!std::isfinite(state.sigma2) || !std::isfinite(state.t[1].x) ||
        !std::isfinite(state.t[1].y) || !std::isfinite(state.theta[1])) {
      throw Error(ErrorCode::NumericalFailure,
                  "non-finite state at iteration " + std::to_string(iter));
    }

    const auto toc = std::chrono::steady_clock::now();
    posterior.iteration_seconds.push_back(
        std::chrono::duration<double>(toc - tic).count());

    if (iter >= config.burnin && (iter - config.burnin) % config.thin == config.thin - 1) {
      posterior.draws.push_back({iter, state.lambda, state.s, state.sigma2,
                                 state.theta[1], state.t[1]});
    }
  }
  posterior.s_truncation_clamps = state.s_truncation_clamps;
  return posterior;
}

std::vector<double> posterior_similarity(const LinkagePosterior& posterior) {
  if (posterior.draws.empty()) {
    throw Error(ErrorCode::EmptyInput, "posterior has no retained draws");
  }
  const int n = posterior.n();
  std::vector<double> sim(static_cast<std::size_t>(n) * n, 0.0);
  for (const LinkageDraw& draw : posterior.draws) {
    for (int a = 0; a < n; ++a) {
      for (int b = a + 1; b < n; ++b) {
        if (draw.lambda[a] == draw.lambda[b]) {
          sim[static_cast<std::size_t>(a) * n + b] += 1.0;
        }
      }
    }
  }
  const double denom = static_cast<double>(posterior.draws.size());
  for (int a = 0; a < n; ++a) {
    sim[static_cast<std::size_t>(a) * n + a] = 1.0;
    for (int b = a + 1; b < n; ++b) {
      const double v = sim[static_cast<std::size_t>(a) * n + b] / denom;
      sim[static_cast<std::size_t>(a) * n + b] = v;
      sim[static_cast<std::size_t>(b) * n + a] = v;
    }
  }
  return sim;
}

}  // namespace treelink
