#include "treelink/archive.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>

#include "treelink/errors.hpp"

namespace treelink {

namespace fs = std::filesystem;

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, path + ": " + e.what());
  }
  return j;
}

void write_json_file(const std::string& path, const nlohmann::json& value) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::ValidationError, "cannot write " + path);
  out << value.dump(2) << '\n';
}

namespace {

template <typename T>
void write_blob(const std::string& path, const std::vector<T>& values) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::ValidationError, "cannot write " + path);
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(T)));
}

template <typename T>
std::vector<T> read_blob(const std::string& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path);
  const std::streamsize bytes = in.tellg();
  if (bytes % static_cast<std::streamsize>(sizeof(T)) != 0) {
    throw Error(ErrorCode::ParseError, path + ": truncated binary trace");
  }
  std::vector<T> values(static_cast<std::size_t>(bytes) / sizeof(T));
  in.seekg(0);
  in.read(reinterpret_cast<char*>(values.data()), bytes);
  return values;
}

}  // namespace

void write_f64_blob(const std::string& path, const std::vector<double>& values) {
  write_blob(path, values);
}
std::vector<double> read_f64_blob(const std::string& path) {
  return read_blob<double>(path);
}
void write_i32_blob(const std::string& path, const std::vector<std::int32_t>& values) {
  write_blob(path, values);
}
std::vector<std::int32_t> read_i32_blob(const std::string& path) {
  return read_blob<std::int32_t>(path);
}

void write_linkage_archive(const std::string& dir, const LinkagePosterior& posterior,
                           const nlohmann::json& config_snapshot) {
  fs::create_directories(dir);
  const int n = posterior.n();
  const int latents = posterior.latent_count;
  const std::size_t draws = posterior.draws.size();

  std::vector<std::int32_t> lambda;
  lambda.reserve(draws * n);
  std::vector<double> s;
  s.reserve(draws * latents * 2);
  std::vector<double> scalars;
  scalars.reserve(draws * 4);
  std::vector<std::int32_t> iterations;
  iterations.reserve(draws);
  for (const LinkageDraw& draw : posterior.draws) {
    for (int v : draw.lambda) lambda.push_back(v);
    for (const Point2& p : draw.s) {
      s.push_back(p.x);
      s.push_back(p.y);
    }
    scalars.push_back(draw.sigma2);
    scalars.push_back(draw.theta2);
    scalars.push_back(draw.t2.x);
    scalars.push_back(draw.t2.y);
    iterations.push_back(draw.iteration);
  }
  write_i32_blob(dir + "/lambda.bin", lambda);
  write_f64_blob(dir + "/s.bin", s);
  write_f64_blob(dir + "/scalars.bin", scalars);
  write_i32_blob(dir + "/draw_iterations.bin", iterations);

  nlohmann::json manifest;
  manifest["schema_version"] = 1;
  manifest["kind"] = "linkage";
  manifest["seed"] = posterior.seed;
  manifest["n1"] = posterior.n1;
  manifest["n2"] = posterior.n2;
  manifest["latent_count"] = latents;
  manifest["iterations"] = posterior.iterations;
  manifest["burnin"] = posterior.burnin;
  manifest["thin"] = posterior.thin;
  manifest["draw_count"] = draws;
  manifest["s_truncation_clamps"] = posterior.s_truncation_clamps;
  manifest["config"] = config_snapshot;
  manifest["files"] = {
      {"lambda.bin", {{"dtype", "i32"}, {"shape", {draws, n}}}},
      {"s.bin", {{"dtype", "f64"}, {"shape", {draws, latents, 2}}}},
      {"scalars.bin", {{"dtype", "f64"}, {"shape", {draws, 4}},
                       {"columns", {"sigma2", "theta2", "t2x", "t2y"}}}},
      {"draw_iterations.bin", {{"dtype", "i32"}, {"shape", {draws}}}},
  };
  write_json_file(dir + "/manifest.json", manifest);

  double total = 0.0;
  for (double t : posterior.iteration_seconds) total += t;
  nlohmann::json timings;
  timings["total_seconds"] = total;
  timings["iterations_timed"] = posterior.iteration_seconds.size();
  timings["mean_seconds_per_iteration"] =
      posterior.iteration_seconds.empty() ? 0.0
                                          : total / posterior.iteration_seconds.size();
  write_timings_json(dir, timings);
}

LinkagePosterior read_linkage_archive(const std::string& dir,
                                      nlohmann::json* manifest_out) {
  const nlohmann::json manifest = read_json_file(dir + "/manifest.json");
  if (manifest.value("kind", "") != "linkage") {
    throw Error(ErrorCode::SchemaError, dir + " is not a linkage archive");
  }
  LinkagePosterior posterior;
  posterior.n1 = manifest.at("n1").get<int>();
  posterior.n2 = manifest.at("n2").get<int>();
  posterior.latent_count = manifest.at("latent_count").get<int>();
  posterior.iterations = manifest.at("iterations").get<int>();
  posterior.burnin = manifest.at("burnin").get<int>();
  posterior.thin = manifest.at("thin").get<int>();
  posterior.seed = manifest.at("seed").get<std::uint64_t>();
  posterior.s_truncation_clamps = manifest.at("s_truncation_clamps").get<int>();

  const auto lambda = read_i32_blob(dir + "/lambda.bin");
  const auto s = read_f64_blob(dir + "/s.bin");
  const auto scalars = read_f64_blob(dir + "/scalars.bin");
  const auto iterations = read_i32_blob(dir + "/draw_iterations.bin");
  const std::size_t draws = manifest.at("draw_count").get<std::size_t>();
  const int n = posterior.n();
  const int latents = posterior.latent_count;
  if (lambda.size() != draws * n || s.size() != draws * latents * 2 ||
      scalars.size() != draws * 4 || iterations.size() != draws) {
    throw Error(ErrorCode::ParseError, dir + ": trace sizes disagree with manifest");
  }
  posterior.draws.resize(draws);
  for (std::size_t d = 0; d < draws; ++d) {
    LinkageDraw& draw = posterior.draws[d];
    draw.iteration = iterations[d];
    draw.lambda.assign(lambda.begin() + d * n, lambda.begin() + (d + 1) * n);
    draw.s.resize(latents);
    for (int j = 0; j < latents; ++j) {
      draw.s[j] = {s[(d * latents + j) * 2], s[(d * latents + j) * 2 + 1]};
    }
    draw.sigma2 = scalars[d * 4];
    draw.theta2 = scalars[d * 4 + 1];
    draw.t2 = {scalars[d * 4 + 2], scalars[d * 4 + 3]};
  }
  if (manifest_out != nullptr) *manifest_out = manifest;
  return posterior;
}

void write_growth_archive(const std::string& dir, const std::string& kind,
                          const std::vector<std::string>& param_names,
                          const std::vector<double>& draws_row_major,
                          const nlohmann::json& config_snapshot,
                          const nlohmann::json& extra) {
  fs::create_directories(dir);
  const std::size_t params = param_names.size();
  if (params == 0 || draws_row_major.size() % params != 0) {
    throw Error(ErrorCode::ValidationError, "growth draw matrix shape mismatch");
  }
  const std::size_t draws = draws_row_major.size() / params;
  write_f64_blob(dir + "/draws.bin", draws_row_major);

  nlohmann::json manifest;
  manifest["schema_version"] = 1;
  manifest["kind"] = kind;
  manifest["param_names"] = param_names;
  manifest["draw_count"] = draws;
  manifest["config"] = config_snapshot;
  for (const auto& [key, value] : extra.items()) manifest[key] = value;

  // Deterministic summary block per parameter.
  nlohmann::json summaries = nlohmann::json::object();
  for (std::size_t p = 0; p < params; ++p) {
    std::vector<double> col(draws);
    for (std::size_t d = 0; d < draws; ++d) col[d] = draws_row_major[d * params + p];
    double mean = 0.0;
    for (double v : col) mean += v;
    mean /= draws;
    double ss = 0.0;
    for (double v : col) ss += (v - mean) * (v - mean);
    const auto [lo, hi] = credible_interval(col, 0.90);
    summaries[param_names[p]] = {{"mean", mean},
                                 {"sd", draws > 1 ? std::sqrt(ss / (draws - 1)) : 0.0},
                                 {"lo90", lo},
                                 {"hi90", hi}};
  }
  manifest["summaries"] = summaries;
  manifest["files"] = {
      {"draws.bin", {{"dtype", "f64"}, {"shape", {draws, params}}}},
  };
  write_json_file(dir + "/manifest.json", manifest);
}

GrowthArchive read_growth_archive(const std::string& dir) {
  GrowthArchive archive;
  archive.manifest = read_json_file(dir + "/manifest.json");
  archive.kind = archive.manifest.value("kind", "");
  if (archive.kind != "growth" && archive.kind != "la" && archive.kind != "ndm") {
    throw Error(ErrorCode::SchemaError, dir + " is not a growth-style archive");
  }
  archive.param_names =
      archive.manifest.at("param_names").get<std::vector<std::string>>();
  archive.draws = read_f64_blob(dir + "/draws.bin");
  const std::size_t params = archive.param_names.size();
  if (params == 0 || archive.draws.size() % params != 0) {
    throw Error(ErrorCode::ParseError, dir + ": draw matrix shape mismatch");
  }
  archive.n_draws = static_cast<int>(archive.draws.size() / params);
  return archive;
}

std::vector<double> GrowthArchive::column(const std::string& name) const {
  const auto it = std::find(param_names.begin(), param_names.end(), name);
  if (it == param_names.end()) {
    throw Error(ErrorCode::InvalidConfig, "archive has no parameter " + name);
  }
  const std::size_t params = param_names.size();
  const std::size_t col = static_cast<std::size_t>(it - param_names.begin());
  std::vector<double> out(n_draws);
  for (int d = 0; d < n_draws; ++d) out[d] = draws[d * params + col];
  return out;
}

void write_timings_json(const std::string& dir, const nlohmann::json& timings) {
  write_json_file(dir + "/timings.json", timings);
}

}  // namespace treelink
