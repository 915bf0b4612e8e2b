#include "treelink/distributions.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <numbers>

#include "treelink/errors.hpp"

namespace treelink {

double normal_logpdf(double x, double mean, double variance) {
  const double d = x - mean;
  return -0.5 * std::log(2.0 * std::numbers::pi * variance) - d * d / (2.0 * variance);
}

double inv_gamma_cdf(double x, double shape, double scale) {
  if (x <= 0.0) return 0.0;
  // X ~ InvGamma(a, b)  <=>  1/X ~ Gamma(a, rate = b), so P(X <= x) = Q(a, b/x).
  return boost::math::gamma_q(shape, scale / x);
}

double inv_gamma_median(double shape, double scale) {
  // Q(a, b/m) = 1/2  =>  m = b / gamma_q_inv(a, 1/2).
  return scale / boost::math::gamma_q_inv(shape, 0.5);
}

double sample_truncated_inv_gamma(Rng& rng, double shape, double scale, double upper) {
  if (!(shape > 0.0) || !(scale > 0.0) || !(upper > 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "truncated inverse-gamma requires positive parameters");
  }
  // G = 1/X ~ Gamma(shape, rate = scale); X <= upper  <=>  G >= scale/upper.
  // Draw G from the upper tail by inversion on the regularized upper gamma.
  const double q_at_bound = boost::math::gamma_q(shape, scale / upper);
  const double u = 1.0 - rng.uniform();  // (0, 1], so q_target stays positive
  const double q_target = u * q_at_bound;
  const double g = boost::math::gamma_q_inv(shape, q_target);
  const double x = scale / g;
  return std::min(x, upper);
}

double skewt_logpdf(double g, double mu, double tau, double delta, double omega) {
  if (!(omega > 2.0)) {
    throw Error(ErrorCode::InvalidTailParameter, "skew-t tail parameter must exceed 2");
  }
  if (!(tau > 0.0) || !(std::abs(delta) < 1.0)) {
    throw Error(ErrorCode::ValidationError, "skew-t requires tau > 0 and |delta| < 1");
  }
  const double z = (g - mu) / std::sqrt(tau);
  const double log_c = std::lgamma(0.5 * (omega + 1.0)) -
                       0.5 * std::log(std::numbers::pi * (omega - 2.0)) -
                       std::lgamma(0.5 * omega);
  const double c = std::exp(log_c);
  const double a = 4.0 * delta * c * (omega - 2.0) / (omega - 1.0);
  const double b = std::sqrt(1.0 + 3.0 * delta * delta - a * a);
  const double side = z < -a / b ? 1.0 - delta : 1.0 + delta;
  const double w = (b * z + a) / side;
  return std::log(b) + log_c -
         0.5 * (omega + 1.0) * std::log1p(w * w / (omega - 2.0)) -
         0.5 * std::log(tau);
}

}  // namespace treelink
