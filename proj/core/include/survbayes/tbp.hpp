#pragma once

// Transformed Bernstein polynomial (TBP) prior on the baseline survival under PH:
//
//   S0(t) = sum_j w_j I(S_theta(t) | j, L - j + 1),   w ~ Dirichlet(alpha, ..., alpha)
//
// with I(.|a,b) the beta CDF and S_theta a parametric centering survival function.
// The centering expressions are implemented as proper survival functions, e.g.
// Weibull S_theta(t) = exp{-(e^theta1 t)^exp(theta2)} so that S0(0) = 1.
//
// Sampled (unconstrained) layout: beta, theta1, theta2, log alpha, z_1..z_{L-1},
// where w_j = e^{z_j} / (1 + sum_k e^{z_k}) for j < L and w_L = 1 / (1 + sum_k e^{z_k}).
// The log Jacobian of that additive-logistic map is sum_j log w_j.

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "survbayes/conjugate.hpp"
#include "survbayes/data.hpp"
#include "survbayes/posterior.hpp"

namespace survbayes {

enum class CenteringFamily { kWeibull, kLogLogistic, kLogNormal };

CenteringFamily parse_centering(std::string_view name);
std::string_view centering_name(CenteringFamily family);

/// S_theta, its complement F_theta (computed without cancellation) and log f_theta at t.
struct CenteringValue {
  double survival = 1.0;
  double cdf = 0.0;
  double log_density = 0.0;
};
CenteringValue evaluate_centering(CenteringFamily family, double theta1, double theta2, double t);

struct TbpSpec {
  std::size_t L = 15;
  double a0 = 1.0;  // alpha ~ Gamma(a0, b0)
  double b0 = 1.0;
  CenteringFamily centering = CenteringFamily::kWeibull;
  Eigen::Vector2d theta0 = Eigen::Vector2d::Zero();
  Eigen::Matrix2d V0 = Eigen::Matrix2d::Identity();
  NormalPrior beta{0.0, 1e5, {}};  // N(0, 1e10)
  std::optional<double> fixed_alpha;

  void validate() const;
};

/// Sets theta0 and V0 to the MLE (and its covariance) of the PH model whose
/// baseline survival is the centering family itself.
TbpSpec tbp_spec_from_mle(const TrialDataset& data, CenteringFamily family, std::size_t L = 15);

struct TbpState {
  std::vector<double> weights;  // simplex of length L
  double theta1 = 0.0;
  double theta2 = 0.0;
  double alpha = 1.0;
  double beta = 0.0;

  static TbpState equal_weights(std::size_t L, double theta1, double theta2, double beta = 0.0);
};

/// Centering and Bernstein terms at fixed (theta1, theta2), one row per distinct observed
/// time. Row i of `cdf` holds I(S_theta(t_i) | j, L-j+1); `pdf` rows are filled where
/// events occur.
struct TbpBasis {
  std::size_t L = 0;
  std::vector<double> times, control, treated, events;  // counts per distinct time
  double treated_events = 0.0;
  std::vector<double> cdf, pdf;
  double sum_log_f = 0.0;  // sum of log f_theta over events
  void compute(const TrialDataset& data, const TbpSpec& spec, double theta1, double theta2);
  double loglik(std::span<const double> weights, double beta) const;

  /// Weighted log S0 and log mixture sums; the log-likelihood is affine in them given beta.
  struct Sums {
    double control = 0.0;  // sum over (at risk in control - events) log S0
    double treated = 0.0;  // sum over treated log S0
    double mix = 0.0;      // sum over events log sum_j w_j beta_pdf
  };
  Sums sums(std::span<const double> weights) const;
  double loglik(const Sums& sums, double beta) const;
};

/// I(x | j, L - j + 1) for j = 1..L, and the matching beta densities, given x and 1 - x.
void bernstein_basis(double x, double xbar, std::size_t L, std::span<double> cdf, std::span<double> pdf);

double tbp_survival(const TbpState& state, const TbpSpec& spec, double t);
/// Baseline density f0(t) = sum_j w_j beta_pdf(S_theta(t); j, L-j+1) f_theta(t).
double tbp_density(const TbpState& state, const TbpSpec& spec, double t);
double tbp_hazard(const TbpState& state, const TbpSpec& spec, double t);

/// PH log-likelihood with S(t|Z) = S0(t)^exp(beta Z).
double tbp_loglik(const TrialDataset& data, const TbpSpec& spec, const TbpState& state);
/// Log-likelihood plus the Dirichlet, Gamma, bivariate normal and normal priors.
double tbp_log_posterior(const TrialDataset& data, const TbpSpec& spec, const TbpState& state);

std::vector<double> weights_from_logits(std::span<const double> z);
std::vector<double> logits_from_weights(std::span<const double> w);
/// Decodes the unconstrained layout described above.
TbpState tbp_state_from_params(std::span<const double> params, std::size_t L);
/// Log posterior on the unconstrained layout, Jacobians included.
double tbp_log_posterior_unconstrained(const TrialDataset& data, const TbpSpec& spec,
                                       std::span<const double> params);

FitResult fit_tbp(const TrialDataset& data, const TbpSpec& spec, const McmcConfig& cfg,
                  const std::vector<double>& thresholds = {1.5});

}  // namespace survbayes
