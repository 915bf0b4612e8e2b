#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <span>
#include <vector>

namespace treelink::testing {

inline double mean(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

inline double sample_variance(std::span<const double> xs) {
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return ss / static_cast<double>(xs.size() - 1);
}

inline double pearson(std::span<const double> a, std::span<const double> b) {
  const double ma = mean(a), mb = mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

// Kolmogorov asymptotic survival function with Stephens' small-sample factor.
inline double kolmogorov_pvalue(double d, double n_effective) {
  const double sqrt_n = std::sqrt(n_effective);
  const double lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * d;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = 2.0 * std::pow(-1.0, k - 1) * std::exp(-2.0 * k * k * lambda * lambda);
    p += term;
    if (std::abs(term) < 1e-12) break;
  }
  return std::clamp(p, 0.0, 1.0);
}

// One-sample KS test against a CDF.
inline double ks_test(std::vector<double> xs, const std::function<double(double)>& cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
  }
  return kolmogorov_pvalue(d, n);
}

// Two-sample KS test (two-sided).
inline double ks_test_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() -
                             static_cast<double>(j) / b.size()));
  }
  const double ne = static_cast<double>(a.size()) * b.size() / (a.size() + b.size());
  return kolmogorov_pvalue(d, ne);
}

// One-sided two-sample KS: evidence that sample `a` stochastically dominates
// sample `b` (F_a <= F_b). Returns the p-value of D- = sup(F_b - F_a).
inline double ks_test_dominance(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, static_cast<double>(j) / b.size() - static_cast<double>(i) / a.size());
  }
  const double ne = static_cast<double>(a.size()) * b.size() / (a.size() + b.size());
  // One-sided tail of the limiting distribution.
  return std::exp(-2.0 * ne * d * d);
}

// Split-chain Gelman-Rubin statistic over m chains of equal length.
inline double gelman_rubin(const std::vector<std::vector<double>>& chains) {
  std::vector<std::vector<double>> split;
  for (const auto& chain : chains) {
    const std::size_t half = chain.size() / 2;
    split.emplace_back(chain.begin(), chain.begin() + half);
    split.emplace_back(chain.begin() + half, chain.begin() + 2 * half);
  }
  const double m = static_cast<double>(split.size());
  const double n = static_cast<double>(split.front().size());
  std::vector<double> means;
  double w = 0.0;
  for (const auto& chain : split) {
    means.push_back(mean(chain));
    w += sample_variance(chain);
  }
  w /= m;
  const double b = n * sample_variance(means);
  const double var_plus = (n - 1.0) / n * w + b / n;
  return std::sqrt(var_plus / w);
}

inline double chi2_2_cdf(double x) { return x <= 0.0 ? 0.0 : 1.0 - std::exp(-0.5 * x); }

inline double normal_cdf(double x, double mean, double sd) {
  return 0.5 * std::erfc(-(x - mean) / (sd * std::sqrt(2.0)));
}

}  // namespace treelink::testing
