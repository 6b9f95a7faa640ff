#pragma once

// Fully Bayesian exponential and Weibull proportional-hazards models.
//
// Canonical parameterization (log-hazard linear):
//   log h(t|Z) = intercept + beta Z + (shape - 1) log t + log shape
// so h0(t) = shape * e^intercept * t^(shape-1) and H0(t) = e^intercept * t^shape.
// The sampled vector is (beta, intercept[, log shape]).

#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "survbayes/conjugate.hpp"
#include "survbayes/data.hpp"
#include "survbayes/frequentist.hpp"
#include "survbayes/mcmc.hpp"
#include "survbayes/posterior.hpp"

namespace survbayes {

struct GammaPrior {
  double shape = 1.0;
  double rate = 1.0;
};

struct HalfNormalPrior {
  double scale = 1.0;
};

using ShapePrior = std::variant<GammaPrior, HalfNormalPrior>;

struct ParametricPriorSpec {
  NormalPrior beta{0.0, 2.5, {}};
  NormalPrior intercept{0.0, 20.0, {}};
  ShapePrior shape = HalfNormalPrior{2.0};

  void validate() const;

  /// Named prior sets: "rstanarm" (default), "survhe", "inla", "diffuse".
  static ParametricPriorSpec preset(std::string_view name);
};

double log_posterior_parametric(const TrialDataset& data, ParametricFamily family,
                                const ParametricPriorSpec& priors, std::span<const double> params);

/// Analytic gradient of log_posterior_parametric.
Eigen::VectorXd log_posterior_parametric_gradient(const TrialDataset& data, ParametricFamily family,
                                                  const ParametricPriorSpec& priors,
                                                  std::span<const double> params);

/// Chains start at the posterior mode approximation obtained by combining the
/// MLE with the beta prior, which keeps dogmatic priors from stalling the sampler.
FitResult fit_parametric(const TrialDataset& data, ParametricFamily family,
                         const ParametricPriorSpec& priors, const McmcConfig& cfg,
                         const std::vector<double>& thresholds = {1.5});

}  // namespace survbayes
