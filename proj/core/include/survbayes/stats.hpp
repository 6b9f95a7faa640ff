#pragma once

// Scalar densities, distribution functions and random variates shared by the models.

#include <cmath>
#include <limits>

#include "survbayes/rng.hpp"

namespace survbayes {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double normal_cdf(double z);
double normal_sf(double z);  // 1 - Phi(z) without cancellation
double normal_quantile(double p);
double log_normal_cdf(double z);
double log_normal_sf(double z);

double normal_logpdf(double x, double mean, double sd);
// Shape/rate parameterization.
double gamma_logpdf(double x, double shape, double rate);
double half_normal_logpdf(double x, double scale);

double sample_normal(Rng& rng);
double sample_gamma(Rng& rng, double shape, double rate);

}  // namespace survbayes
