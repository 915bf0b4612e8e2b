#include "treelink/metrics.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "treelink/errors.hpp"

namespace treelink {

namespace {

std::uint64_t pair_key(int a, int b, int n) {
  const int lo = std::min(a, b);
  const int hi = std::max(a, b);
  return static_cast<std::uint64_t>(lo) * static_cast<std::uint64_t>(n) +
         static_cast<std::uint64_t>(hi);
}

}  // namespace

PairSet pairs_from_lambda(std::span<const int> lambda, int n) {
  std::unordered_map<int, std::vector<int>> clusters;
  for (int g = 0; g < static_cast<int>(lambda.size()); ++g) {
    clusters[lambda[g]].push_back(g);
  }
  PairSet pairs;
  for (const auto& [latent, members] : clusters) {
    for (std::size_t i = 0; i < members.size(); ++i) {
      for (std::size_t j = i + 1; j < members.size(); ++j) {
        pairs.push_back(pair_key(members[i], members[j], n));
      }
    }
  }
  std::sort(pairs.begin(), pairs.end());
  return pairs;
}

PairSet pairs_from_matches(const std::vector<NdmMatch>& matches, int n1, int n) {
  PairSet pairs;
  pairs.reserve(matches.size());
  for (const NdmMatch& m : matches) {
    pairs.push_back(pair_key(m.file1_position, n1 + m.file2_position, n));
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  return pairs;
}

std::vector<TruthLink> read_truth_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::SchemaError, path + " is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "file_index,record_id,latent_id") {
    throw Error(ErrorCode::SchemaError,
                path + ": expected header file_index,record_id,latent_id");
  }
  std::vector<TruthLink> links;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    TruthLink link;
    char c1, c2;
    if (!(ss >> link.file_index >> c1 >> link.record_id >> c2 >> link.latent_id) ||
        c1 != ',' || c2 != ',') {
      throw Error(ErrorCode::ParseError, path + ": malformed row " + std::to_string(row));
    }
    links.push_back(link);
  }
  return links;
}

void write_truth_csv(const std::string& path, const std::vector<TruthLink>& links) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::ValidationError, "cannot write " + path);
  out << "file_index,record_id,latent_id\n";
  for (const TruthLink& link : links) {
    out << link.file_index << ',' << link.record_id << ',' << link.latent_id << '\n';
  }
}

PairSet pairs_from_truth(const std::vector<TruthLink>& links, const RecordSet& records) {
  // Map (file_index, record_id) to the global index used by the samplers.
  std::unordered_map<std::int64_t, int> global;
  const int n1 = records.n1();
  for (int i = 0; i < n1; ++i) {
    global[(1LL << 32) | static_cast<std::uint32_t>(records.first.records[i].id)] = i;
  }
  for (int j = 0; j < records.n2(); ++j) {
    global[(2LL << 32) | static_cast<std::uint32_t>(records.second.records[j].id)] = n1 + j;
  }
  std::unordered_map<int, std::vector<int>> clusters;
  for (const TruthLink& link : links) {
    const std::int64_t key =
        (static_cast<std::int64_t>(link.file_index) << 32) |
        static_cast<std::uint32_t>(link.record_id);
    const auto it = global.find(key);
    if (it == global.end()) continue;
    clusters[link.latent_id].push_back(it->second);
  }
  const int n = records.total();
  PairSet pairs;
  for (const auto& [latent, members] : clusters) {
    for (std::size_t i = 0; i < members.size(); ++i) {
      for (std::size_t j = i + 1; j < members.size(); ++j) {
        pairs.push_back(pair_key(members[i], members[j], n));
      }
    }
  }
  std::sort(pairs.begin(), pairs.end());
  return pairs;
}

LinkEvalResult eval_links(const PairSet& predicted, const PairSet& truth) {
  PairSet tp_set;
  std::set_intersection(predicted.begin(), predicted.end(), truth.begin(), truth.end(),
                        std::back_inserter(tp_set));
  LinkEvalResult r;
  r.tp = static_cast<long>(tp_set.size());
  r.fp = static_cast<long>(predicted.size()) - r.tp;
  r.fn = static_cast<long>(truth.size()) - r.tp;
  r.precision = predicted.empty() ? 1.0 : static_cast<double>(r.tp) / predicted.size();
  r.recall = truth.empty() ? 1.0 : static_cast<double>(r.tp) / truth.size();
  return r;
}

std::vector<LinkEvalResult> eval_links_per_draw(const LinkagePosterior& posterior,
                                                const PairSet& truth) {
  std::vector<LinkEvalResult> out;
  out.reserve(posterior.draws.size());
  for (const LinkageDraw& draw : posterior.draws) {
    out.push_back(eval_links(pairs_from_lambda(draw.lambda, posterior.n()), truth));
  }
  return out;
}

CoverageResult eval_coverage(
    const std::vector<std::map<std::string, std::pair<double, double>>>& intervals,
    const std::map<std::string, double>& truth) {
  if (intervals.empty()) {
    throw Error(ErrorCode::EmptyInput, "coverage needs at least one replicate");
  }
  CoverageResult result;
  for (const auto& [name, value] : truth) {
    ParameterCoverage pc;
    pc.name = name;
    pc.truth = value;
    for (const auto& replicate : intervals) {
      const auto it = replicate.find(name);
      if (it == replicate.end()) continue;
      ++pc.intervals;
      if (it->second.first <= value && value <= it->second.second) ++pc.hits;
    }
    pc.coverage = pc.intervals > 0 ? static_cast<double>(pc.hits) / pc.intervals : 0.0;
    result.parameters.push_back(pc);
  }
  return result;
}

std::vector<TimingRow> timing_report(
    const std::vector<std::tuple<int, double, bool, double>>& archives) {
  std::vector<TimingRow> rows;
  rows.reserve(archives.size());
  for (const auto& [n, box, unrestricted, mean_seconds] : archives) {
    rows.push_back({n, box, unrestricted, mean_seconds, 1.0});
  }
  std::sort(rows.begin(), rows.end(), [](const TimingRow& a, const TimingRow& b) {
    if (a.n != b.n) return a.n < b.n;
    return a.box_half_width < b.box_half_width;
  });
  for (TimingRow& row : rows) {
    for (const TimingRow& ref : rows) {
      if (ref.n == row.n && ref.unrestricted &&
          ref.mean_seconds_per_iteration > 0.0) {
        row.speedup_vs_unrestricted =
            ref.mean_seconds_per_iteration / row.mean_seconds_per_iteration;
        break;
      }
    }
  }
  return rows;
}

}  // namespace treelink
