#pragma once

// Piecewise-linear log-hazard baseline:
//
//   log h0(t) = a0 + a1 t + sum_{k=2}^{K} a_k (|t - knot_{k-1}| - knot_{k-1})
//
// with interior knots knot_1 < ... < knot_{K-1}. The bend coefficients a_2..a_K get
// a N(0, sigma^2) prior with sigma ~ Uniform(lower, upper).
//
// Sampled layout: beta, a0, a1, a2..aK, log sigma.

#include <span>
#include <vector>

#include "survbayes/conjugate.hpp"
#include "survbayes/data.hpp"
#include "survbayes/posterior.hpp"

namespace survbayes {

struct SplineHazardSpec {
  std::size_t K = 20;
  std::vector<double> knots;  // K - 1 interior knots
  double coef_sd = 100.0;     // a0, a1 ~ N(0, 1e4)
  double sigma_lower = 0.01;
  double sigma_upper = 100.0;
  NormalPrior beta{0.0, 100.0, {}};

  void validate() const;
  /// K - 1 knots at k * max_event_time / K.
  static SplineHazardSpec equally_spaced(const TrialDataset& data, std::size_t K = 20);
};

/// coefs holds a0, a1, a2..aK.
double spline_log_hazard(const SplineHazardSpec& spec, std::span<const double> coefs, double t);
/// Exact integral of exp(log h0) over (0, t].
double spline_cumulative_hazard(const SplineHazardSpec& spec, std::span<const double> coefs, double t);

/// Evaluates log h0 and H0 for many times with one pass over the knots.
class SplineBaseline {
 public:
  SplineBaseline(const SplineHazardSpec& spec, std::span<const double> coefs);
  std::size_t segment_of(double t) const;
  double log_hazard(double t, std::size_t segment) const;
  double cumulative(double t, std::size_t segment) const;

 private:
  const std::vector<double>& knots_;
  std::vector<double> start_;      // segment start times (0 first)
  std::vector<double> log_start_;  // log h0 at each segment start
  std::vector<double> slope_;      // d log h0 / dt on each segment
  std::vector<double> cum_start_;  // H0 at each segment start
};

double spline_loglik(const TrialDataset& data, const SplineHazardSpec& spec, double beta,
                     std::span<const double> coefs);
/// Log posterior on the sampled layout, including the log sigma Jacobian.
double spline_log_posterior(const TrialDataset& data, const SplineHazardSpec& spec,
                            std::span<const double> params);

FitResult fit_spline_hazard(const TrialDataset& data, const SplineHazardSpec& spec, const McmcConfig& cfg,
                            const std::vector<double>& thresholds = {1.5});

/// Deviance at the posterior mean plus the number of knots, for choosing K.
struct SplineGridPoint {
  std::size_t K = 0;
  double deviance = 0.0;
  double criterion = 0.0;
  double beta_mean = 0.0;
};
std::vector<SplineGridPoint> spline_grid_search(const TrialDataset& data, const std::vector<std::size_t>& Ks,
                                                const McmcConfig& cfg);

}  // namespace survbayes
