#pragma once

#include <Eigen/Dense>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "survbayes/data.hpp"

namespace survbayes {

/// Product-limit survival estimate. One entry per distinct event time.
struct StepSurvivalCurve {
  std::optional<Arm> arm;  // empty for the pooled curve
  std::vector<double> times;
  std::vector<double> survival;
  std::vector<std::size_t> at_risk;
  std::vector<std::size_t> events;
  // Greenwood variance S(t)^2 * sum d/(n(n-d)); reported as 0 once S(t) reaches 0.
  std::vector<double> variance;

  /// S(t) for arbitrary t (right-continuous step function).
  double at(double t) const;
};

/// Returns the pooled curve, or control then treatment curves when `by_arm`.
std::vector<StepSurvivalCurve> kaplan_meier(const TrialDataset& data, bool by_arm);
void write_curve_csv(std::ostream& out, const StepSurvivalCurve& curve);

struct MleFit {
  std::vector<std::string> names;
  Eigen::VectorXd estimate;
  Eigen::VectorXd standard_errors;
  Eigen::MatrixXd covariance;
  double log_likelihood = 0.0;
  bool converged = false;
  int iterations = 0;

  /// Position of a named parameter; throws std::out_of_range when absent.
  std::size_t index_of(const std::string& name) const;
  double value(const std::string& name) const { return estimate(index(name)); }
  double se(const std::string& name) const { return standard_errors(index(name)); }
  double beta() const { return value("beta"); }
  double beta_se() const { return se("beta"); }

 private:
  Eigen::Index index(const std::string& name) const {
    return static_cast<Eigen::Index>(index_of(name));
  }
};

enum class TieMethod { kBreslow, kEfron };

/// log partial likelihood with its first two derivatives at `beta`.
struct PartialLikelihood {
  double value = 0.0;
  double score = 0.0;
  double information = 0.0;  // minus the second derivative
};
PartialLikelihood cox_partial_likelihood(const TrialDataset& data, double beta, TieMethod ties);

/// Newton-Raphson maximizer of the Cox partial likelihood for the arm effect.
/// Throws DataError for a degenerate covariate and NumericError when the
/// likelihood is monotone (the MLE is at +/- infinity).
MleFit cox_fit(const TrialDataset& data, TieMethod ties = TieMethod::kBreslow);

/// Two-sample log-rank z statistic (treatment observed minus expected events).
double logrank_z(const TrialDataset& data);

enum class ParametricFamily { kExponential, kWeibull };

/// Parameters: beta, log rate [, log shape] with h0(t) = shape * rate * t^(shape-1).
/// On single-arm data beta is not identifiable and parametric_mle drops it.
///
/// `grad` and `hess` are optional outputs sized to the parameter count.
double parametric_loglik(const TrialDataset& data, ParametricFamily family,
                         const Eigen::VectorXd& params, Eigen::VectorXd* grad = nullptr,
                         Eigen::MatrixXd* hess = nullptr);

struct MleOptions {
  int max_iterations = 100;
  double gradient_tolerance = 1e-8;
  double step_tolerance = 1e-10;
};

/// Damped Newton on the log scale of the positive parameters. Throws
/// ConvergenceError, with the iteration trace, when the iteration limit is hit.
MleFit parametric_mle(const TrialDataset& data, ParametricFamily family, const MleOptions& opts = {});

/// Generic smooth maximizer used for families without analytic derivatives:
/// Newton steps with a central finite-difference Hessian and backtracking.
MleFit maximize_numeric(const std::function<double(const Eigen::VectorXd&)>& loglik,
                        Eigen::VectorXd start, std::vector<std::string> names,
                        const MleOptions& opts = {});

}  // namespace survbayes
