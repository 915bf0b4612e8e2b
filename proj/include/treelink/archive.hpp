#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "treelink/la.hpp"
#include "treelink/linkage.hpp"

namespace treelink {

// A run archive is a directory holding manifest.json plus flat little-endian
// binary trace files, and a timings.json sidecar. Everything except
// timings.json is a pure function of (config, seed), so reruns are
// byte-identical; timings.json carries the measured wall-clock metadata.

nlohmann::json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const nlohmann::json& value);

void write_f64_blob(const std::string& path, const std::vector<double>& values);
std::vector<double> read_f64_blob(const std::string& path);
void write_i32_blob(const std::string& path, const std::vector<std::int32_t>& values);
std::vector<std::int32_t> read_i32_blob(const std::string& path);

// Linkage archive: lambda.bin (i32 draws x n), s.bin (f64 draws x N x 2),
// scalars.bin (f64 draws x 4: sigma2, theta2, t2x, t2y).
void write_linkage_archive(const std::string& dir, const LinkagePosterior& posterior,
                           const nlohmann::json& config_snapshot);
LinkagePosterior read_linkage_archive(const std::string& dir,
                                      nlohmann::json* manifest_out = nullptr);

// Growth-style archive (growth / la / ndm): draws.bin (f64 draws x params).
struct GrowthArchive {
  std::string kind;  // "growth", "la" or "ndm"
  std::vector<std::string> param_names;
  int n_draws = 0;
  std::vector<double> draws;  // row-major [n_draws, param_names.size()]
  nlohmann::json manifest;

  std::vector<double> column(const std::string& name) const;
};

void write_growth_archive(const std::string& dir, const std::string& kind,
                          const std::vector<std::string>& param_names,
                          const std::vector<double>& draws_row_major,
                          const nlohmann::json& config_snapshot,
                          const nlohmann::json& extra);
GrowthArchive read_growth_archive(const std::string& dir);

void write_timings_json(const std::string& dir, const nlohmann::json& timings);

}  // namespace treelink
