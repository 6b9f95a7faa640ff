#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "survbayes/mcmc.hpp"

namespace survbayes {

struct TailProbability {
  double threshold_hr = 1.5;
  double probability = 0.0;
  friend bool operator==(const TailProbability&, const TailProbability&) = default;
};

/// One row of the results table: the log(HR) posterior (or a frequentist estimate).
struct PosteriorSummary {
  std::string label;
  std::string model;
  bool bayesian = true;
  double mean = 0.0;
  double sd = 0.0;
  double median = 0.0;
  double lower = 0.0;  // equal-tailed interval at `level`
  double upper = 0.0;
  double level = 0.95;
  std::vector<TailProbability> tail;  // Pr(HR > c); empty for frequentist rows
  std::optional<double> rhat;
  std::optional<double> ess_ratio;
  bool converged = true;
  std::string verdict;
  double seconds = 0.0;  // wall clock, never serialized into deterministic artifacts

  friend bool operator==(const PosteriorSummary&, const PosteriorSummary&) = default;
};

/// R type-7 empirical quantile of `values` (copied and sorted internally).
double empirical_quantile(std::vector<double> values, double p);

PosteriorSummary summarize_draws(std::span<const double> draws, const std::vector<double>& thresholds,
                                 double level = 0.95);

/// Output of every MCMC-based model fit.
struct FitResult {
  ChainSet chains;
  Diagnostics diagnostics;
  PosteriorSummary summary;  // of the "beta" parameter
  std::vector<std::string> warnings;
};

/// Diagnoses `chains` (judging only beta) and summarizes beta.
FitResult finish_fit(ChainSet chains, const std::vector<double>& thresholds, std::string model,
                     std::vector<std::string> warnings);

/// Warning text when times are large enough to risk overflow in exp(log h0); empty otherwise.
std::string time_scale_warning(double max_time);

}  // namespace survbayes
