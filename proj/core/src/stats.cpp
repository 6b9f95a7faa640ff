#include "survbayes/stats.hpp"

#include <boost/math/distributions/normal.hpp>
#include <numbers>
#include <random>

namespace survbayes {

namespace {
constexpr double kLogSqrt2Pi = 0.91893853320467274178;

// log(1 - Phi(z)) for large positive z via the Mills-ratio expansion.
double log_sf_tail(double z) {
  const double z2 = z * z;
  const double series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2);
  return -0.5 * z2 - kLogSqrt2Pi - std::log(z) + std::log(series);
}
}  // namespace

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_sf(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

double normal_quantile(double p) {
  if (p <= 0.0) return -std::numeric_limits<double>::infinity();
  if (p >= 1.0) return std::numeric_limits<double>::infinity();
  static const boost::math::normal_distribution<double> standard;
  return boost::math::quantile(standard, p);
}

double log_normal_sf(double z) {
  if (z > 30.0) return log_sf_tail(z);
  return std::log(normal_sf(z));
}

double log_normal_cdf(double z) { return log_normal_sf(-z); }

double normal_logpdf(double x, double mean, double sd) {
  if (std::isinf(sd)) return 0.0;  // flat
  const double z = (x - mean) / sd;
  return -0.5 * z * z - std::log(sd) - kLogSqrt2Pi;
}

double gamma_logpdf(double x, double shape, double rate) {
  if (!(x > 0.0)) return kNegInf;
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

double half_normal_logpdf(double x, double scale) {
  if (x < 0.0) return kNegInf;
  const double z = x / scale;
  return std::log(2.0) - 0.5 * z * z - std::log(scale) - kLogSqrt2Pi;
}

double sample_normal(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

double sample_gamma(Rng& rng, double shape, double rate) {
  return std::gamma_distribution<double>(shape, 1.0 / rate)(rng);
}

}  // namespace survbayes
