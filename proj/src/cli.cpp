#include "treelink/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>

#include "treelink/archive.hpp"
#include "treelink/errors.hpp"
#include "treelink/growth.hpp"
#include "treelink/la.hpp"
#include "treelink/linkage.hpp"
#include "treelink/metrics.hpp"
#include "treelink/raster.hpp"
#include "treelink/records.hpp"
#include "treelink/simgen.hpp"

namespace treelink {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::InvalidConfig, std::string("bad value for '") + key + "'");
  }
}

json section(const json& config, const char* name) {
  if (!config.contains(name)) {
    throw Error(ErrorCode::InvalidConfig,
                std::string("config is missing the '") + name + "' section");
  }
  return config.at(name);
}

// ---- config section parsers ----------------------------------------------

GrowthParams growth_params_from_json(const json& j) {
  GrowthParams p;
  p.alpha = get_or(j, "alpha", 1.0);
  p.gamma = get_or(j, "gamma", 12.0);
  p.beta = get_or(j, "beta", std::vector<double>{3.0, 0.5, -0.5, 0.5, -0.5});
  p.tau = get_or(j, "tau", 0.5);
  p.delta = get_or(j, "delta", 0.0);
  p.omega = get_or(j, "omega", 10.0);
  return p;
}

json growth_params_to_json(const GrowthParams& p) {
  return {{"alpha", p.alpha}, {"gamma", p.gamma}, {"beta", p.beta},
          {"tau", p.tau},     {"delta", p.delta}, {"omega", p.omega}};
}

SimConfig sim_config_from_json(const json& j) {
  SimConfig c;
  c.density = get_or(j, "density", c.density);
  c.domain_side = get_or(j, "domain_side", c.domain_side);
  c.analysis_side = get_or(j, "analysis_side", c.analysis_side);
  c.hardcore_radius = get_or(j, "hardcore_radius", c.hardcore_radius);
  c.softcore_violation_prob = get_or(j, "softcore_violation_prob", c.softcore_violation_prob);
  c.sigma_obs = get_or(j, "sigma_obs", c.sigma_obs);
  c.theta_true = get_or(j, "theta_true", c.theta_true);
  const auto t = get_or(j, "t_true", std::vector<double>{0.0, 0.0});
  if (t.size() != 2) throw Error(ErrorCode::InvalidConfig, "t_true must have 2 entries");
  c.t_true = {t[0], t[1]};
  if (j.contains("growth_truth")) c.growth = growth_params_from_json(j.at("growth_truth"));
  else c.growth = growth_params_from_json(json::object());
  c.recruit_rate = get_or(j, "recruit_rate", c.recruit_rate);
  c.year1 = get_or(j, "year1", c.year1);
  c.year2 = get_or(j, "year2", c.year2);
  c.n_covariates = get_or(j, "n_covariates", c.n_covariates);
  c.raster_cellsize = get_or(j, "raster_cellsize", c.raster_cellsize);
  c.smoothing_passes = get_or(j, "smoothing_passes", c.smoothing_passes);
  if (j.contains("mark_model")) {
    const json& m = j.at("mark_model");
    c.mark_model.log_mean = get_or(m, "log_mean", c.mark_model.log_mean);
    c.mark_model.log_sd = get_or(m, "log_sd", c.mark_model.log_sd);
    const auto slopes = get_or(m, "slopes", std::vector<double>{0.25, 0.25});
    if (slopes.size() != 2) {
      throw Error(ErrorCode::InvalidConfig, "mark_model slopes must have 2 entries");
    }
    c.mark_model.covariate_slopes = {slopes[0], slopes[1]};
    c.mark_model.recruit_beta_b = get_or(m, "recruit_beta_b", c.mark_model.recruit_beta_b);
  }
  c.seed = get_or(j, "seed", static_cast<std::uint64_t>(c.seed));
  return c;
}

json sim_config_to_json(const SimConfig& c) {
  return {{"density", c.density},
          {"domain_side", c.domain_side},
          {"analysis_side", c.analysis_side},
          {"hardcore_radius", c.hardcore_radius},
          {"softcore_violation_prob", c.softcore_violation_prob},
          {"sigma_obs", c.sigma_obs},
          {"theta_true", c.theta_true},
          {"t_true", {c.t_true.x, c.t_true.y}},
          {"growth_truth", growth_params_to_json(c.growth)},
          {"recruit_rate", c.recruit_rate},
          {"year1", c.year1},
          {"year2", c.year2},
          {"n_covariates", c.n_covariates},
          {"raster_cellsize", c.raster_cellsize},
          {"smoothing_passes", c.smoothing_passes},
          {"mark_model",
           {{"log_mean", c.mark_model.log_mean},
            {"log_sd", c.mark_model.log_sd},
            {"slopes", {c.mark_model.covariate_slopes[0], c.mark_model.covariate_slopes[1]}},
            {"recruit_beta_b", c.mark_model.recruit_beta_b}}},
          {"seed", c.seed}};
}

LinkagePriors linkage_priors_from_json(const json& j) {
  LinkagePriors p;
  p.c_sigma = get_or(j, "c_sigma", p.c_sigma);
  p.d_sigma = get_or(j, "d_sigma", p.d_sigma);
  p.b_sigma = get_or(j, "b_sigma", p.b_sigma);
  p.kappa = get_or(j, "kappa", p.kappa);
  p.nu = get_or(j, "nu", p.nu);
  p.b_theta = get_or(j, "b_theta", p.b_theta);
  p.sigma2_t = get_or(j, "sigma2_t", p.sigma2_t);
  p.q = get_or(j, "q", p.q);
  p.fix_theta[1] = get_or(j, "fix_theta", true);
  p.fix_translation[1] = get_or(j, "fix_translation", false);
  return p;
}

json linkage_priors_to_json(const LinkagePriors& p) {
  return {{"c_sigma", p.c_sigma}, {"d_sigma", p.d_sigma}, {"b_sigma", p.b_sigma},
          {"kappa", p.kappa},     {"nu", p.nu},           {"b_theta", p.b_theta},
          {"sigma2_t", p.sigma2_t}, {"q", p.q},
          {"fix_theta", p.fix_theta[1]}, {"fix_translation", p.fix_translation[1]}};
}

SamplerConfig sampler_config_from_json(const json& j) {
  SamplerConfig c;
  c.iterations = get_or(j, "iterations", c.iterations);
  c.burnin = get_or(j, "burnin", c.burnin);
  c.thin = get_or(j, "thin", c.thin);
  c.box_half_width = get_or(j, "box_half_width", c.box_half_width);
  c.min_candidates = get_or(j, "min_candidates", c.min_candidates);
  c.box_growth_factor = get_or(j, "box_growth_factor", c.box_growth_factor);
  c.random_scan = get_or(j, "random_scan", c.random_scan);
  c.latent_domain_margin = get_or(j, "latent_domain_margin", c.latent_domain_margin);
  c.theta_step = get_or(j, "theta_step", c.theta_step);
  c.seed = get_or(j, "seed", static_cast<std::uint64_t>(c.seed));
  return c;
}

json sampler_config_to_json(const SamplerConfig& c) {
  return {{"iterations", c.iterations},
          {"burnin", c.burnin},
          {"thin", c.thin},
          {"box_half_width", c.box_half_width},
          {"min_candidates", c.min_candidates},
          {"box_growth_factor", c.box_growth_factor},
          {"random_scan", c.random_scan},
          {"latent_domain_margin", c.latent_domain_margin},
          {"theta_step", c.theta_step},
          {"seed", c.seed}};
}

GrowthPriors growth_priors_from_json(const json& j) {
  GrowthPriors p;
  p.a_gamma = get_or(j, "a_gamma", p.a_gamma);
  p.b_gamma = get_or(j, "b_gamma", 0.0);  // 0 means: derive from the data
  p.a_alpha = get_or(j, "a_alpha", p.a_alpha);
  p.b_alpha = get_or(j, "b_alpha", p.b_alpha);
  p.c_alpha = get_or(j, "c_alpha", p.c_alpha);
  p.d_alpha = get_or(j, "d_alpha", p.d_alpha);
  p.mu_beta = get_or(j, "mu_beta", std::vector<double>{});
  p.sigma2_beta = get_or(j, "sigma2_beta", std::vector<double>{});
  p.b_tau = get_or(j, "b_tau", 25.0);
  p.sigma2_delta = get_or(j, "sigma2_delta", p.sigma2_delta);
  p.b_omega = get_or(j, "b_omega", p.b_omega);
  const std::string family = get_or(j, "error_family", std::string("gaussian"));
  if (family == "gaussian") {
    p.error_family = ErrorFamily::Gaussian;
  } else if (family == "skew_t") {
    p.error_family = ErrorFamily::SkewT;
  } else {
    throw Error(ErrorCode::InvalidConfig, "error_family must be 'gaussian' or 'skew_t'");
  }
  return p;
}

json growth_priors_to_json(const GrowthPriors& p) {
  return {{"a_gamma", p.a_gamma}, {"b_gamma", p.b_gamma},
          {"a_alpha", p.a_alpha}, {"b_alpha", p.b_alpha},
          {"c_alpha", p.c_alpha}, {"d_alpha", p.d_alpha},
          {"mu_beta", p.mu_beta}, {"sigma2_beta", p.sigma2_beta},
          {"b_tau", p.b_tau},     {"sigma2_delta", p.sigma2_delta},
          {"b_omega", p.b_omega},
          {"error_family", p.error_family == ErrorFamily::Gaussian ? "gaussian" : "skew_t"}};
}

GrowthMcmcConfig growth_mcmc_from_json(const json& j) {
  GrowthMcmcConfig c;
  c.iterations = get_or(j, "iterations", c.iterations);
  c.burnin = get_or(j, "burnin", c.burnin);
  c.thin = get_or(j, "thin", c.thin);
  c.seed = get_or(j, "seed", static_cast<std::uint64_t>(c.seed));
  c.prior_only = get_or(j, "prior_only", c.prior_only);
  return c;
}

json growth_mcmc_to_json(const GrowthMcmcConfig& c) {
  return {{"iterations", c.iterations}, {"burnin", c.burnin}, {"thin", c.thin},
          {"seed", c.seed}, {"prior_only", c.prior_only}};
}

LAConfig la_config_from_json(const json& j) {
  LAConfig c;
  c.k = get_or(j, "k", c.k);
  c.l = get_or(j, "l", c.l);
  c.r1 = get_or(j, "r1", c.r1);
  c.r2 = get_or(j, "r2", c.r2);
  c.boundary_buffer = get_or(j, "boundary_buffer", c.boundary_buffer);
  c.seed = get_or(j, "seed", static_cast<std::uint64_t>(c.seed));
  return c;
}

json la_config_to_json(const LAConfig& c) {
  return {{"k", c.k}, {"l", c.l}, {"r1", c.r1}, {"r2", c.r2},
          {"boundary_buffer", c.boundary_buffer}, {"seed", c.seed}};
}

CovariateOptions covariate_options_from_json(const json& j) {
  CovariateOptions o;
  o.use_competition = get_or(j, "use_competition", o.use_competition);
  o.competition_radius = get_or(j, "competition_radius", o.competition_radius);
  return o;
}

Domain domain_from_json(const json& j, const RecordSet& records) {
  if (j.contains("domain")) {
    const auto d = j.at("domain").get<std::vector<double>>();
    if (d.size() != 4) {
      throw Error(ErrorCode::InvalidConfig, "domain must be [xmin, ymin, xmax, ymax]");
    }
    Domain domain{d[0], d[1], d[2], d[3]};
    domain.validate();
    return domain;
  }
  return data_extent(records);
}

std::vector<Raster> load_standardized_rasters(const json& j, const Domain& domain) {
  std::vector<Raster> rasters;
  for (const auto& path : get_or(j, "rasters", std::vector<std::string>{})) {
    rasters.push_back(read_raster_asc(path));
  }
  if (!rasters.empty()) standardize_covariates(rasters, domain);
  return rasters;
}

// Derives b_gamma from the data when the config leaves it at the sentinel 0:
// the maximum volume observed in the first file.
void resolve_gamma_bound(GrowthPriors& priors, const RecordSet& records) {
  if (priors.b_gamma > 0.0) return;
  double vmax = 0.0;
  for (const Record& r : records.first.records) vmax = std::max(vmax, r.volume);
  priors.b_gamma = std::max(vmax, priors.a_gamma * 2.0 + 1.0);
}

// ---- shared pipeline steps ------------------------------------------------

std::vector<GrowthCluster> clusters_from_truth_linkage(
    const RecordSet& records, const std::vector<TruthLink>& links, double r1, double r2) {
  std::vector<int> lambda(records.total(), -1);
  const int n1 = records.n1();
  std::unordered_map<std::int64_t, int> latent_of;
  for (const TruthLink& link : links) {
    latent_of[(static_cast<std::int64_t>(link.file_index) << 32) |
              static_cast<std::uint32_t>(link.record_id)] = link.latent_id;
  }
  int next_latent = 0;
  for (const TruthLink& link : links) next_latent = std::max(next_latent, link.latent_id + 1);
  auto lookup = [&](int file_index, int record_id) {
    const auto it = latent_of.find((static_cast<std::int64_t>(file_index) << 32) |
                                   static_cast<std::uint32_t>(record_id));
    return it == latent_of.end() ? next_latent++ : it->second;
  };
  for (int i = 0; i < n1; ++i) lambda[i] = lookup(1, records.first.records[i].id);
  for (int j = 0; j < records.n2(); ++j) {
    lambda[n1 + j] = lookup(2, records.second.records[j].id);
  }
  const auto partition = derive_clusters(lambda, records);
  auto clusters = derive_growth_clusters(partition, records, {}, r1, r2);
  fill_locations_from_file1(clusters, records);
  return clusters;
}

void write_growth_posterior_archive(const std::string& dir, const std::string& kind,
                                    const GrowthPosterior& posterior,
                                    const json& config_snapshot, const json& extra) {
  const auto names = posterior.param_names();
  std::vector<double> rows;
  rows.reserve(posterior.draws.size() * names.size());
  for (const GrowthParams& p : posterior.draws) {
    const auto row = posterior.flatten(p);
    rows.insert(rows.end(), row.begin(), row.end());
  }
  json full_extra = extra;
  full_extra["block_acceptance"] = posterior.block_acceptance;
  write_growth_archive(dir, kind, names, rows, config_snapshot, full_extra);
}

void write_pooled_archive(const std::string& dir, const PooledPosterior& pooled,
                          const json& config_snapshot) {
  const auto names = pooled.param_names();
  std::vector<double> rows;
  rows.reserve(pooled.draws.size() * names.size());
  GrowthPosterior proto;
  proto.family = pooled.family;
  proto.beta_dim = pooled.beta_dim;
  std::vector<std::int32_t> tags;
  tags.reserve(pooled.draws.size() * 2);
  for (const PooledDraw& d : pooled.draws) {
    const auto row = proto.flatten(d.params);
    rows.insert(rows.end(), row.begin(), row.end());
    tags.push_back(d.linkage_draw);
    tags.push_back(d.growth_draw);
  }
  json extra;
  extra["skipped_draws"] = pooled.skipped_draws;
  extra["cluster_counts"] = pooled.cluster_counts;
  write_growth_archive(dir, "la", names, rows, config_snapshot, extra);
  write_i32_blob(dir + "/draw_tags.bin", tags);
}

void write_ndm_pairs_csv(const std::string& path, const RecordSet& records,
                         const std::vector<NdmMatch>& matches) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::ValidationError, "cannot write " + path);
  out << "file1_record_id,file2_record_id\n";
  for (const NdmMatch& m : matches) {
    out << records.first.records[m.file1_position].id << ','
        << records.second.records[m.file2_position].id << '\n';
  }
}

// ---- subcommands -----------------------------------------------------------

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  int threads = 1;
};

int cmd_simulate(const CommonArgs& args) {
  const json config = read_json_file(args.config_path);
  SimConfig sim = sim_config_from_json(section(config, "simulate"));
  if (args.seed) sim.seed = *args.seed;
  const SimDataset dataset = generate_dataset(sim);

  fs::create_directories(args.out_dir);
  fs::create_directories(args.out_dir + "/covariates");
  write_records_csv(args.out_dir + "/records.csv", dataset.records);
  write_truth_csv(args.out_dir + "/truth.csv", dataset.truth.links);
  for (std::size_t c = 0; c < dataset.covariates.size(); ++c) {
    write_raster_asc(args.out_dir + "/covariates/cov_" + std::to_string(c) + ".asc",
                     dataset.covariates[c]);
  }
  json meta;
  meta["schema_version"] = 1;
  meta["kind"] = "simulation";
  meta["config"] = sim_config_to_json(sim);
  meta["n1"] = dataset.records.n1();
  meta["n2"] = dataset.records.n2();
  meta["latents"] = dataset.truth.latents.size();
  write_json_file(args.out_dir + "/sim_meta.json", meta);
  std::cout << "simulated " << dataset.records.n1() << " + " << dataset.records.n2()
            << " records into " << args.out_dir << "\n";
  return 0;
}

int cmd_link(const CommonArgs& args) {
  const json config = read_json_file(args.config_path);
  const json j = section(config, "link");
  const RecordSet records = ingest_records(j.at("records").get<std::string>());
  const Domain domain = domain_from_json(j, records);
  const LinkagePriors priors = linkage_priors_from_json(get_or(j, "priors", json::object()));
  SamplerConfig sampler = sampler_config_from_json(get_or(j, "sampler", json::object()));
  if (args.seed) sampler.seed = *args.seed;

  const LinkagePosterior posterior = run_gibbs(records, domain, priors, sampler);

  json snapshot;
  snapshot["records"] = j.at("records");
  snapshot["domain"] = {domain.xmin, domain.ymin, domain.xmax, domain.ymax};
  snapshot["priors"] = linkage_priors_to_json(priors);
  snapshot["sampler"] = sampler_config_to_json(sampler);
  write_linkage_archive(args.out_dir, posterior, snapshot);
  std::cout << "linkage archive with " << posterior.draws.size() << " draws at "
            << args.out_dir << "\n";
  return 0;
}

int cmd_growth(const CommonArgs& args) {
  const json config = read_json_file(args.config_path);
  const json j = section(config, "growth");
  const RecordSet records = ingest_records(j.at("records").get<std::string>());
  const Domain domain = domain_from_json(j, records);
  const auto covariate_json = get_or(j, "covariates", json::object());
  const std::vector<Raster> rasters = load_standardized_rasters(covariate_json, domain);
  const CovariateOptions cov_options = covariate_options_from_json(covariate_json);
  GrowthPriors priors = growth_priors_from_json(get_or(j, "priors", json::object()));
  resolve_gamma_bound(priors, records);
  GrowthMcmcConfig mcmc = growth_mcmc_from_json(get_or(j, "mcmc", json::object()));
  if (args.seed) mcmc.seed = *args.seed;
  LAConfig bounds = la_config_from_json(get_or(j, "la", json::object()));
  bounds.r1 = get_or(j, "r1", bounds.r1);
  bounds.r2 = get_or(j, "r2", bounds.r2);
  bounds.boundary_buffer = get_or(j, "boundary_buffer", bounds.boundary_buffer);

  const std::string linkage = get_or(j, "linkage", std::string("ndm"));
  json snapshot;
  snapshot["records"] = j.at("records");
  snapshot["linkage"] = linkage;
  snapshot["priors"] = growth_priors_to_json(priors);
  snapshot["mcmc"] = growth_mcmc_to_json(mcmc);
  snapshot["r1"] = bounds.r1;
  snapshot["r2"] = bounds.r2;
  snapshot["boundary_buffer"] = bounds.boundary_buffer;

  if (linkage == "ndm") {
    const NDMResult result =
        run_ndm(records, domain, rasters, cov_options, priors, mcmc, bounds);
    fs::create_directories(args.out_dir);
    write_ndm_pairs_csv(args.out_dir + "/pairs.csv", records, result.matches);
    write_growth_posterior_archive(args.out_dir, "ndm", result.posterior, snapshot,
                                   {{"clusters", result.clusters.size()}});
    std::cout << "ndm growth posterior (" << result.posterior.draws.size()
              << " draws) at " << args.out_dir << "\n";
  } else if (linkage == "truth") {
    const auto links = read_truth_csv(j.at("truth").get<std::string>());
    auto clusters = clusters_from_truth_linkage(records, links, bounds.r1, bounds.r2);
    apply_boundary_buffer(clusters, domain, bounds.boundary_buffer);
    attach_covariates(clusters, rasters, records, cov_options);
    const GrowthPosterior posterior = fit_growth(clusters, priors, mcmc);
    write_growth_posterior_archive(args.out_dir, "growth", posterior, snapshot,
                                   {{"clusters", clusters.size()}});
    std::cout << "true-linkage growth posterior (" << posterior.draws.size()
              << " draws) at " << args.out_dir << "\n";
  } else {
    throw Error(ErrorCode::InvalidConfig, "linkage must be 'ndm' or 'truth'");
  }
  return 0;
}

int cmd_la(const CommonArgs& args) {
  const json config = read_json_file(args.config_path);
  const json j = section(config, "la");
  const RecordSet records = ingest_records(j.at("records").get<std::string>());
  const Domain domain = domain_from_json(j, records);
  const auto covariate_json = get_or(j, "covariates", json::object());
  const std::vector<Raster> rasters = load_standardized_rasters(covariate_json, domain);
  const CovariateOptions cov_options = covariate_options_from_json(covariate_json);
  GrowthPriors priors = growth_priors_from_json(get_or(j, "growth_priors", json::object()));
  resolve_gamma_bound(priors, records);
  const GrowthMcmcConfig mcmc = growth_mcmc_from_json(get_or(j, "growth_mcmc", json::object()));
  LAConfig la = la_config_from_json(get_or(j, "config", json::object()));
  if (args.seed) la.seed = *args.seed;
  la.threads = args.threads;

  const LinkagePosterior linkage =
      read_linkage_archive(j.at("linkage_archive").get<std::string>());
  const PooledPosterior pooled =
      run_la(linkage, records, domain, rasters, cov_options, priors, mcmc, la);

  json snapshot;
  snapshot["records"] = j.at("records");
  snapshot["linkage_archive"] = j.at("linkage_archive");
  snapshot["growth_priors"] = growth_priors_to_json(priors);
  snapshot["growth_mcmc"] = growth_mcmc_to_json(mcmc);
  snapshot["la"] = la_config_to_json(la);
  write_pooled_archive(args.out_dir, pooled, snapshot);
  std::cout << "pooled posterior (" << pooled.draws.size() << " draws, "
            << pooled.skipped_draws << " skipped linkage draws) at " << args.out_dir
            << "\n";
  return 0;
}

int cmd_ndm(const CommonArgs& args) {
  const json config = read_json_file(args.config_path);
  const json j = section(config, "ndm");
  const RecordSet records = ingest_records(j.at("records").get<std::string>());
  const auto matches = ndm_link(records.first, records.second);
  fs::create_directories(args.out_dir);
  write_ndm_pairs_csv(args.out_dir + "/pairs.csv", records, matches);
  std::cout << matches.size() << " ndm pairs at " << args.out_dir << "/pairs.csv\n";
  return 0;
}

int cmd_evaluate(const CommonArgs& args) {
  const json config = read_json_file(args.config_path);
  const json j = section(config, "evaluate");
  fs::create_directories(args.out_dir);
  const double level = get_or(j, "level", 0.9);

  // Link metrics against truth.
  if (j.contains("records") && j.contains("truth")) {
    const RecordSet records = ingest_records(j.at("records").get<std::string>());
    const auto truth_links = read_truth_csv(j.at("truth").get<std::string>());
    const PairSet truth_pairs = pairs_from_truth(truth_links, records);

    std::ofstream per_draw(args.out_dir + "/link_metrics.csv");
    per_draw << "source,draw,tp,fp,fn,precision,recall\n";
    std::ofstream summary(args.out_dir + "/link_summary.csv");
    summary << "source,stat,precision,recall\n";
    summary.precision(10);
    per_draw.precision(10);

    for (const auto& entry : get_or(j, "linkage_archives", std::vector<json>{})) {
      const std::string name = entry.at("name").get<std::string>();
      const LinkagePosterior posterior =
          read_linkage_archive(entry.at("dir").get<std::string>());
      const auto per = eval_links_per_draw(posterior, truth_pairs);
      std::vector<double> precisions, recalls;
      for (std::size_t d = 0; d < per.size(); ++d) {
        per_draw << name << ',' << d << ',' << per[d].tp << ',' << per[d].fp << ','
                 << per[d].fn << ',' << per[d].precision << ',' << per[d].recall << '\n';
        precisions.push_back(per[d].precision);
        recalls.push_back(per[d].recall);
      }
      std::sort(precisions.begin(), precisions.end());
      std::sort(recalls.begin(), recalls.end());
      double pm = 0.0, rm = 0.0;
      for (double v : precisions) pm += v;
      for (double v : recalls) rm += v;
      summary << name << ",mean," << pm / per.size() << ',' << rm / per.size() << '\n';
      for (const auto& [stat, p] : std::vector<std::pair<std::string, double>>{
               {"q25", 0.25}, {"q50", 0.5}, {"q75", 0.75}}) {
        summary << name << ',' << stat << ',' << quantile(precisions, p) << ','
                << quantile(recalls, p) << '\n';
      }
    }
    if (get_or(j, "ndm", false)) {
      const auto matches = ndm_link(records.first, records.second);
      const auto result = eval_links(
          pairs_from_matches(matches, records.n1(), records.total()), truth_pairs);
      per_draw << "ndm,0," << result.tp << ',' << result.fp << ',' << result.fn << ','
               << result.precision << ',' << result.recall << '\n';
      summary << "ndm,point," << result.precision << ',' << result.recall << '\n';
    }
  }

  // Credible intervals per growth-style archive.
  if (j.contains("growth_archives")) {
    std::optional<std::map<std::string, double>> truth;
    if (j.contains("growth_truth")) {
      const GrowthParams t = growth_params_from_json(j.at("growth_truth"));
      std::map<std::string, double> m;
      m["alpha"] = t.alpha;
      for (std::size_t k = 0; k < t.beta.size(); ++k) {
        m["beta" + std::to_string(k)] = t.beta[k];
      }
      m["gamma"] = t.gamma;
      m["tau"] = t.tau;
      truth = m;
    }
    std::ofstream intervals(args.out_dir + "/intervals.csv");
    intervals << "source,param,lo,hi,truth,hit\n";
    intervals.precision(10);
    for (const auto& entry : j.at("growth_archives")) {
      const std::string name = entry.at("name").get<std::string>();
      const GrowthArchive archive = read_growth_archive(entry.at("dir").get<std::string>());
      for (const std::string& param : archive.param_names) {
        const auto col = archive.column(param);
        const auto [lo, hi] = credible_interval(col, level);
        intervals << name << ',' << param << ',' << lo << ',' << hi << ',';
        if (truth && truth->count(param)) {
          const double tv = truth->at(param);
          intervals << tv << ',' << (lo <= tv && tv <= hi ? 1 : 0);
        } else {
          intervals << ',';
        }
        intervals << '\n';
      }
    }
  }

  // Timing table across linkage archives.
  if (j.contains("timing")) {
    std::vector<std::tuple<int, double, bool, double>> rows;
    for (const auto& dir : j.at("timing").get<std::vector<std::string>>()) {
      json manifest;
      read_linkage_archive(dir, &manifest);
      const json timings = read_json_file(dir + "/timings.json");
      const json& sampler = manifest.at("config").at("sampler");
      const auto d = manifest.at("config").at("domain").get<std::vector<double>>();
      const double diagonal = std::hypot(d[2] - d[0], d[3] - d[1]);
      const double box = sampler.at("box_half_width").get<double>();
      rows.emplace_back(manifest.at("n1").get<int>() + manifest.at("n2").get<int>(),
                        box, box >= diagonal,
                        timings.at("mean_seconds_per_iteration").get<double>());
    }
    std::ofstream out(args.out_dir + "/timing.csv");
    out << "n,box_half_width,unrestricted,mean_seconds_per_iteration,speedup_vs_unrestricted\n";
    out.precision(10);
    for (const TimingRow& row : timing_report(rows)) {
      out << row.n << ',' << row.box_half_width << ',' << (row.unrestricted ? 1 : 0)
          << ',' << row.mean_seconds_per_iteration << ','
          << row.speedup_vs_unrestricted << '\n';
    }
  }
  std::cout << "evaluation tables at " << args.out_dir << "\n";
  return 0;
}

// One suite replicate: simulate, link, LA, NDM (and optionally TL), metrics.
struct ReplicateOutcome {
  double la_precision = 0.0, la_recall = 0.0;
  double ndm_precision = 0.0, ndm_recall = 0.0;
  std::map<std::string, std::map<std::string, std::pair<double, double>>> intervals;
  int skipped_draws = 0;
};

ReplicateOutcome run_replicate(const json& suite, const SimConfig& sim,
                               const std::string& rep_dir, double level) {
  ReplicateOutcome outcome;
  const SimDataset dataset = generate_dataset(sim);
  fs::create_directories(rep_dir);
  write_records_csv(rep_dir + "/records.csv", dataset.records);
  write_truth_csv(rep_dir + "/truth.csv", dataset.truth.links);

  const Domain domain = sim.analysis_domain();
  LinkagePriors link_priors =
      linkage_priors_from_json(get_or(suite, "link_priors", json::object()));
  SamplerConfig sampler =
      sampler_config_from_json(get_or(suite, "link_sampler", json::object()));
  sampler.seed = Rng::stream(sim.seed, 101).next_u64();
  const LinkagePosterior linkage = run_gibbs(dataset.records, domain, link_priors, sampler);
  {
    json snapshot;
    snapshot["domain"] = {domain.xmin, domain.ymin, domain.xmax, domain.ymax};
    snapshot["priors"] = linkage_priors_to_json(link_priors);
    snapshot["sampler"] = sampler_config_to_json(sampler);
    write_linkage_archive(rep_dir + "/link", linkage, snapshot);
  }

  GrowthPriors growth_priors =
      growth_priors_from_json(get_or(suite, "growth_priors", json::object()));
  resolve_gamma_bound(growth_priors, dataset.records);
  GrowthMcmcConfig mcmc =
      growth_mcmc_from_json(get_or(suite, "growth_mcmc", json::object()));
  LAConfig la = la_config_from_json(get_or(suite, "la", json::object()));
  la.seed = Rng::stream(sim.seed, 202).next_u64();
  la.threads = 1;  // replicates already run in parallel
  const CovariateOptions cov_options;  // suite fits use raster covariates only

  std::vector<Raster> rasters = dataset.covariates;
  standardize_covariates(rasters, domain);

  const PooledPosterior pooled = run_la(linkage, dataset.records, domain, rasters,
                                        cov_options, growth_priors, mcmc, la);
  outcome.skipped_draws = pooled.skipped_draws;
  write_pooled_archive(rep_dir + "/la", pooled, json::object());

  GrowthMcmcConfig ndm_mcmc = mcmc;
  ndm_mcmc.seed = Rng::stream(sim.seed, 303).next_u64();
  // Match the pooled sample size so interval noise is comparable.
  ndm_mcmc.iterations = mcmc.burnin + la.k * la.l * mcmc.thin / 4;
  const NDMResult ndm = run_ndm(dataset.records, domain, rasters, cov_options,
                                growth_priors, ndm_mcmc, la);
  write_growth_posterior_archive(rep_dir + "/ndm", "ndm", ndm.posterior, json::object(),
                                 {{"clusters", ndm.clusters.size()}});

  // Intervals per approach.
  for (const ParamSummary& s : pooled.summaries()) {
    const auto col = pooled.column(s.name);
    outcome.intervals["la"][s.name] = credible_interval(col, level);
  }
  {
    const auto names = ndm.posterior.param_names();
    for (std::size_t c = 0; c < names.size(); ++c) {
      std::vector<double> col;
      col.reserve(ndm.posterior.draws.size());
      for (const GrowthParams& p : ndm.posterior.draws) {
        col.push_back(ndm.posterior.flatten(p)[c]);
      }
      outcome.intervals["ndm"][names[c]] = credible_interval(col, level);
    }
  }
  if (get_or(suite, "include_true_linkage", false)) {
    auto clusters = clusters_from_truth_linkage(dataset.records, dataset.truth.links,
                                                la.r1, la.r2);
    apply_boundary_buffer(clusters, domain, la.boundary_buffer);
    attach_covariates(clusters, rasters, dataset.records, cov_options);
    GrowthMcmcConfig tl_mcmc = ndm_mcmc;
    tl_mcmc.seed = Rng::stream(sim.seed, 404).next_u64();
    const GrowthPosterior tl = fit_growth(clusters, growth_priors, tl_mcmc);
    write_growth_posterior_archive(rep_dir + "/tl", "growth", tl, json::object(),
                                   {{"clusters", clusters.size()}});
    const auto names = tl.param_names();
    for (std::size_t c = 0; c < names.size(); ++c) {
      std::vector<double> col;
      col.reserve(tl.draws.size());
      for (const GrowthParams& p : tl.draws) col.push_back(tl.flatten(p)[c]);
      outcome.intervals["tl"][names[c]] = credible_interval(col, level);
    }
  }

  // Link metrics: LA per-draw means, NDM point values.
  const PairSet truth_pairs = pairs_from_truth(dataset.truth.links, dataset.records);
  const auto per = eval_links_per_draw(linkage, truth_pairs);
  for (const LinkEvalResult& r : per) {
    outcome.la_precision += r.precision;
    outcome.la_recall += r.recall;
  }
  outcome.la_precision /= per.size();
  outcome.la_recall /= per.size();
  const auto ndm_eval = eval_links(
      pairs_from_matches(ndm.matches, dataset.records.n1(), dataset.records.total()),
      truth_pairs);
  outcome.ndm_precision = ndm_eval.precision;
  outcome.ndm_recall = ndm_eval.recall;
  return outcome;
}

int cmd_suite(const CommonArgs& args) {
  const json config = read_json_file(args.config_path);
  const json suite = section(config, "suite");
  const int replicates = get_or(suite, "replicates", 2);
  if (replicates < 1) throw Error(ErrorCode::InvalidConfig, "replicates must be >= 1");
  const auto densities = get_or(suite, "densities", std::vector<double>{0.06});
  const auto noises = get_or(suite, "noises", std::vector<double>{0.25});
  const auto alphas = get_or(suite, "alphas", std::vector<double>{1.0});
  const double level = get_or(suite, "level", 0.9);
  const std::uint64_t master_seed =
      args.seed ? *args.seed : get_or(suite, "seed", static_cast<std::uint64_t>(1));
  const SimConfig sim_template = sim_config_from_json(get_or(suite, "sim", json::object()));

  fs::create_directories(args.out_dir);

  struct Cell {
    double density, noise, alpha;
    std::string name;
  };
  std::vector<Cell> cells;
  for (double d : densities) {
    for (double s : noises) {
      for (double a : alphas) {
        std::ostringstream name;
        name << "cell_d" << d << "_s" << s << "_a" << a;
        cells.push_back({d, s, a, name.str()});
      }
    }
  }

  std::ofstream link_csv(args.out_dir + "/linkage_metrics.csv");
  link_csv << "cell,replicate,approach,precision,recall\n";
  link_csv.precision(10);
  std::ofstream agg_csv(args.out_dir + "/aggregate.csv");
  agg_csv << "cell,approach,mean_precision,mean_recall,replicates\n";
  agg_csv.precision(10);
  std::ofstream cov_csv(args.out_dir + "/coverage.csv");
  cov_csv << "cell,approach,param,hits,intervals,coverage,truth\n";
  cov_csv.precision(10);

  for (std::size_t ci = 0; ci < cells.size(); ++ci) {
    const Cell& cell = cells[ci];
    std::vector<ReplicateOutcome> outcomes(replicates);
    std::atomic<int> next{0};
    auto worker = [&]() {
      for (;;) {
        const int r = next.fetch_add(1);
        if (r >= replicates) return;
        SimConfig sim = sim_template;
        sim.density = cell.density;
        sim.sigma_obs = cell.noise;
        sim.growth.alpha = cell.alpha;
        sim.seed = Rng::stream(master_seed, ci * 100000 + static_cast<std::size_t>(r)).next_u64();
        char rep_name[32];
        std::snprintf(rep_name, sizeof(rep_name), "rep_%03d", r);
        outcomes[r] = run_replicate(suite, sim,
                                    args.out_dir + "/" + cell.name + "/" + rep_name, level);
      }
    };
    const int workers = std::max(1, std::min(args.threads, replicates));
    if (workers == 1) {
      worker();
    } else {
      std::vector<std::future<void>> tasks;
      for (int w = 0; w < workers; ++w) {
        tasks.push_back(std::async(std::launch::async, worker));
      }
      for (auto& task : tasks) task.get();
    }

    // Aggregate link metrics.
    double la_p = 0.0, la_r = 0.0, ndm_p = 0.0, ndm_r = 0.0;
    for (int r = 0; r < replicates; ++r) {
      link_csv << cell.name << ',' << r << ",la," << outcomes[r].la_precision << ','
               << outcomes[r].la_recall << '\n';
      link_csv << cell.name << ',' << r << ",ndm," << outcomes[r].ndm_precision << ','
               << outcomes[r].ndm_recall << '\n';
      la_p += outcomes[r].la_precision;
      la_r += outcomes[r].la_recall;
      ndm_p += outcomes[r].ndm_precision;
      ndm_r += outcomes[r].ndm_recall;
    }
    agg_csv << cell.name << ",la," << la_p / replicates << ',' << la_r / replicates
            << ',' << replicates << '\n';
    agg_csv << cell.name << ",ndm," << ndm_p / replicates << ',' << ndm_r / replicates
            << ',' << replicates << '\n';

    // Coverage per approach.
    SimConfig cell_sim = sim_template;
    cell_sim.growth.alpha = cell.alpha;
    std::map<std::string, double> truth;
    truth["alpha"] = cell_sim.growth.alpha;
    for (std::size_t k = 0; k < cell_sim.growth.beta.size(); ++k) {
      truth["beta" + std::to_string(k)] = cell_sim.growth.beta[k];
    }
    truth["gamma"] = cell_sim.growth.gamma;
    truth["tau"] = cell_sim.growth.tau;
    for (const std::string approach : {"la", "ndm", "tl"}) {
      std::vector<std::map<std::string, std::pair<double, double>>> interval_sets;
      for (const ReplicateOutcome& o : outcomes) {
        const auto it = o.intervals.find(approach);
        if (it != o.intervals.end()) interval_sets.push_back(it->second);
      }
      if (interval_sets.empty()) continue;
      const CoverageResult coverage = eval_coverage(interval_sets, truth);
      for (const ParameterCoverage& pc : coverage.parameters) {
        cov_csv << cell.name << ',' << approach << ',' << pc.name << ',' << pc.hits
                << ',' << pc.intervals << ',' << pc.coverage << ',' << pc.truth << '\n';
      }
    }
  }
  std::cout << "suite results at " << args.out_dir << "\n";
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"treelink: spatial record linkage and downstream growth inference"};
  app.require_subcommand(1);

  CommonArgs args;
  auto add_common = [&](CLI::App* sub, bool needs_out) {
    sub->add_option("--config", args.config_path, "JSON config file")->required();
    auto* out = sub->add_option("--out", args.out_dir, "output directory");
    if (needs_out) out->required();
    sub->add_option("--seed", [&args](const CLI::results_t& res) {
      args.seed = std::stoull(res[0]);
      return true;
    }, "seed override");
    sub->add_option("--threads", args.threads, "worker threads");
  };

  CLI::App* simulate = app.add_subcommand("simulate", "generate a synthetic dataset");
  CLI::App* link = app.add_subcommand("link", "run the linkage Gibbs sampler");
  CLI::App* growth = app.add_subcommand("growth", "fit the growth model to a fixed linkage");
  CLI::App* la = app.add_subcommand("la", "linkage-averaged growth posterior");
  CLI::App* ndm = app.add_subcommand("ndm", "nearest distance matching baseline");
  CLI::App* evaluate = app.add_subcommand("evaluate", "metrics tables from archives");
  CLI::App* suite = app.add_subcommand("suite", "replicated simulation experiment");
  for (CLI::App* sub : {simulate, link, growth, la, ndm, evaluate, suite}) {
    add_common(sub, true);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(args);
    if (link->parsed()) return cmd_link(args);
    if (growth->parsed()) return cmd_growth(args);
    if (la->parsed()) return cmd_la(args);
    if (ndm->parsed()) return cmd_ndm(args);
    if (evaluate->parsed()) return cmd_evaluate(args);
    if (suite->parsed()) return cmd_suite(args);
  } catch (const Error& e) {
    std::cerr << "error [" << error_code_name(e.code()) << "]: " << e.what() << "\n";
    return e.code() == ErrorCode::NumericalFailure || e.code() == ErrorCode::PoorMixing
               ? 2
               : 1;
  } catch (const std::exception& e) {
    std::cerr << "error [InternalError]: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace treelink
