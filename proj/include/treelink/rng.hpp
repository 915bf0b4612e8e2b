#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace treelink {

// Deterministic random source. All distribution transforms are implemented
// here rather than with std:: distribution objects, so that a (seed, stream)
// pair reproduces the same draw sequence on any platform and compiler.
// Parallel sections take independent streams via `stream(seed, id)`.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  // Substream with an index mixed into the seed (splitmix64 on both words).
  static Rng stream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t next_u64();

  double uniform();                       // [0, 1)
  double uniform(double lo, double hi);
  std::size_t uniform_index(std::size_t n);  // {0, ..., n-1}, unbiased

  double normal();                        // standard, Marsaglia polar
  double normal(double mean, double sd);
  double gamma(double shape, double scale);  // Marsaglia-Tsang
  double beta(double a, double b);
  double cauchy();                        // standard, i.e. t with 1 dof

  // Index draw from unnormalized nonnegative weights by cumulative inversion;
  // consumes exactly one uniform.
  std::size_t categorical(std::span<const double> weights);

  // First k of a Fisher-Yates shuffle of {0, ..., n-1}.
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

 private:
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace treelink
