#pragma once

// Partial-Bayes analysis of the log hazard ratio: a normal prior combined with the
// asymptotically normal Cox estimate gives a closed-form normal posterior.

#include <optional>
#include <utility>

namespace survbayes {

struct NormalPrior {
  double mean = 0.0;
  double sd = 1.0;  // +infinity denotes a flat prior
  std::optional<double> implicit_n;  // n0 with sd^2 = 4 / n0
};

struct NormalLikelihoodSummary {
  double estimate = 0.0;  // observed log(HR)
  double sd = 1.0;        // its standard error
};

struct NormalPosterior {
  double mean = 0.0;
  double sd = 1.0;
};

/// Required number of events (Schoenfeld) for a two-sided level-`alpha` test with
/// the given power, allocation proportion `p` and design log hazard ratio `mu`.
double implicit_sample_size(double alpha, double power, double p, double mu);

NormalPrior prior_from_n0(double mean, double n0);

/// Skeptical prior: centred on no effect.
inline NormalPrior skeptical_prior(double n0) { return prior_from_n0(0.0, n0); }
/// Enthusiastic prior: centred on the design alternative.
inline NormalPrior enthusiastic_prior(double design_log_hr, double n0) {
  return prior_from_n0(design_log_hr, n0);
}

NormalPosterior conjugate_update(const NormalPrior& prior, const NormalLikelihoodSummary& like);

/// Pr(HR > threshold_hr) under the posterior.
double prob_hr_exceeds(const NormalPosterior& post, double threshold_hr);

/// Equal-tailed interval with coverage `level`.
std::pair<double, double> credible_interval(const NormalPosterior& post, double level);

}  // namespace survbayes
