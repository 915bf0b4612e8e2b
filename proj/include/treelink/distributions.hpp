#pragma once

#include "treelink/rng.hpp"

namespace treelink {

double normal_logpdf(double x, double mean, double variance);

// Inverse-Gamma(shape, scale) restricted to (0, upper], sampled exactly by
// inverse-CDF on the equivalent Gamma(shape, rate = scale) tail.
double sample_truncated_inv_gamma(Rng& rng, double shape, double scale, double upper);

// CDF of Inverse-Gamma(shape, scale) at x.
double inv_gamma_cdf(double x, double shape, double scale);

// Median of the untruncated Inverse-Gamma(shape, scale).
double inv_gamma_median(double shape, double scale);

// Hansen's standardized skew-t: skewness delta in (-1, 1), tail omega > 2,
// location/scale adjusted so the distribution has mean mu and variance tau.
// Throws InvalidTailParameter for omega <= 2.
double skewt_logpdf(double g, double mu, double tau, double delta, double omega);

}  // namespace treelink
