#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "treelink/archive.hpp"
#include "treelink/rng.hpp"

using namespace treelink;
namespace fs = std::filesystem;

namespace {

std::string fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "treelink_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir.string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

LinkagePosterior fake_posterior(std::uint64_t seed) {
  Rng rng(seed);
  LinkagePosterior p;
  p.n1 = 3;
  p.n2 = 2;
  p.latent_count = 4;
  p.iterations = 50;
  p.burnin = 10;
  p.thin = 10;
  p.seed = seed;
  p.s_truncation_clamps = 1;
  p.draws.resize(4);
  for (int d = 0; d < 4; ++d) {
    auto& draw = p.draws[d];
    draw.iteration = 10 + 10 * d;
    draw.lambda = {0, 1, 2, static_cast<int>(rng.uniform_index(4)), 3};
    for (int j = 0; j < 4; ++j) draw.s.push_back({rng.uniform(0, 10), rng.uniform(0, 10)});
    draw.sigma2 = rng.uniform(0.01, 1.0);
    draw.theta2 = rng.normal(0, 0.001);
    draw.t2 = {rng.normal(), rng.normal()};
  }
  p.iteration_seconds.assign(50, 0.001);
  return p;
}

}  // namespace

TEST_CASE("binary blobs round trip") {
  const std::string dir = fresh_dir("blobs");
  const std::vector<double> xs{1.5, -2.25, 1e-300, 3e200};
  write_f64_blob(dir + "/x.bin", xs);
  CHECK(read_f64_blob(dir + "/x.bin") == xs);
  const std::vector<std::int32_t> is{-5, 0, 7, 2147483647};
  write_i32_blob(dir + "/i.bin", is);
  CHECK(read_i32_blob(dir + "/i.bin") == is);
}

TEST_CASE("linkage archive round trips losslessly") {
  const std::string dir = fresh_dir("linkage_archive");
  const LinkagePosterior posterior = fake_posterior(5);
  nlohmann::json config{{"records", "records.csv"}};
  write_linkage_archive(dir, posterior, config);

  const LinkagePosterior back = read_linkage_archive(dir);
  CHECK(back.n1 == posterior.n1);
  CHECK(back.n2 == posterior.n2);
  CHECK(back.latent_count == posterior.latent_count);
  CHECK(back.seed == posterior.seed);
  REQUIRE(back.draws.size() == posterior.draws.size());
  for (std::size_t d = 0; d < back.draws.size(); ++d) {
    CHECK(back.draws[d].lambda == posterior.draws[d].lambda);
    CHECK(back.draws[d].sigma2 == posterior.draws[d].sigma2);
    CHECK(back.draws[d].theta2 == posterior.draws[d].theta2);
    CHECK(back.draws[d].t2 == posterior.draws[d].t2);
    CHECK(back.draws[d].iteration == posterior.draws[d].iteration);
    for (std::size_t j = 0; j < back.draws[d].s.size(); ++j) {
      CHECK(back.draws[d].s[j] == posterior.draws[d].s[j]);
    }
  }

  // write -> read -> write must reproduce every byte.
  const std::string dir2 = fresh_dir("linkage_archive2");
  write_linkage_archive(dir2, back, config);
  for (const char* name : {"/manifest.json", "/lambda.bin", "/s.bin", "/scalars.bin",
                           "/draw_iterations.bin"}) {
    CHECK(slurp(dir + name) == slurp(dir2 + name));
  }
}

TEST_CASE("growth archive round trips and extracts columns") {
  const std::string dir = fresh_dir("growth_archive");
  const std::vector<std::string> names{"alpha", "beta0", "gamma"};
  const std::vector<double> draws{1.0, 3.0, 12.0, 1.1, 2.9, 12.5, 0.9, 3.1, 11.5};
  write_growth_archive(dir, "growth", names, draws, {{"seed", 1}}, {{"clusters", 9}});
  const GrowthArchive archive = read_growth_archive(dir);
  CHECK(archive.kind == "growth");
  CHECK(archive.n_draws == 3);
  CHECK(archive.param_names == names);
  CHECK(archive.column("beta0") == std::vector<double>{3.0, 2.9, 3.1});
  CHECK(archive.manifest.at("clusters").get<int>() == 9);
  CHECK(archive.manifest.at("summaries").contains("gamma"));
}

TEST_CASE("timings live outside the deterministic surface") {
  const std::string dir = fresh_dir("timed_archive");
  write_linkage_archive(dir, fake_posterior(9), nlohmann::json::object());
  CHECK(fs::exists(dir + "/timings.json"));
  const auto timings = read_json_file(dir + "/timings.json");
  CHECK(timings.contains("mean_seconds_per_iteration"));
  // manifest carries no timing fields
  const auto manifest = read_json_file(dir + "/manifest.json");
  CHECK(!manifest.contains("timings"));
  CHECK(manifest.dump().find("seconds") == std::string::npos);
}
