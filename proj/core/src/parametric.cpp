#include "survbayes/parametric.hpp"

#include <cmath>

#include "survbayes/errors.hpp"
#include "survbayes/stats.hpp"

namespace survbayes {

namespace {

std::size_t param_count(ParametricFamily family) {
  return family == ParametricFamily::kWeibull ? 3 : 2;
}

void check_normal(const NormalPrior& p, const char* what) {
  if (!(p.sd > 0.0)) throw ConfigError(std::string(what) + " prior sd must be > 0");
}

// Prior on the shape expressed on log shape, Jacobian included.
double log_shape_prior(const ShapePrior& prior, double log_shape, double* dlog) {
  const double shape = std::exp(log_shape);
  if (const auto* g = std::get_if<GammaPrior>(&prior)) {
    if (dlog) *dlog = g->shape - g->rate * shape;
    return gamma_logpdf(shape, g->shape, g->rate) + log_shape;
  }
  const auto& h = std::get<HalfNormalPrior>(prior);
  if (dlog) *dlog = 1.0 - shape * shape / (h.scale * h.scale);
  return half_normal_logpdf(shape, h.scale) + log_shape;
}

double normal_dlog(const NormalPrior& p, double x) {
  if (std::isinf(p.sd)) return 0.0;
  return -(x - p.mean) / (p.sd * p.sd);
}

}  // namespace

void ParametricPriorSpec::validate() const {
  check_normal(beta, "beta");
  check_normal(intercept, "intercept");
  if (const auto* g = std::get_if<GammaPrior>(&shape)) {
    if (!(g->shape > 0.0 && g->rate > 0.0)) throw ConfigError("shape prior Gamma(a, b) needs a, b > 0");
  } else if (!(std::get<HalfNormalPrior>(shape).scale > 0.0)) {
    throw ConfigError("shape prior half-normal scale must be > 0");
  }
}

ParametricPriorSpec ParametricPriorSpec::preset(std::string_view name) {
  ParametricPriorSpec p;
  if (name == "rstanarm" || name.empty()) return p;
  if (name == "survhe") {
    p.beta = {0.0, 5.0, {}};
    p.intercept = {0.0, 5.0, {}};
    p.shape = GammaPrior{0.1, 0.1};
    return p;
  }
  if (name == "inla") {
    p.beta = {0.0, std::sqrt(1000.0), {}};
    p.intercept = {0.0, std::sqrt(1000.0), {}};
    p.shape = GammaPrior{25.0, 25.0};
    return p;
  }
  if (name == "diffuse") {
    p.beta = {0.0, std::sqrt(1e5), {}};
    p.intercept = {0.0, 20.0, {}};
    return p;
  }
  throw ConfigError("unknown parametric prior preset '" + std::string(name) +
                    "' (valid: rstanarm, survhe, inla, diffuse)");
}

double log_posterior_parametric(const TrialDataset& data, ParametricFamily family,
                                const ParametricPriorSpec& priors, std::span<const double> params) {
  const std::size_t dim = param_count(family);
  if (params.size() != dim) throw std::invalid_argument("log_posterior_parametric: wrong parameter count");
  for (double v : params)
    if (!std::isfinite(v)) return kNegInf;
  const Eigen::Map<const Eigen::VectorXd> x(params.data(), static_cast<Eigen::Index>(dim));
  double lp = parametric_loglik(data, family, x);
  lp += normal_logpdf(params[0], priors.beta.mean, priors.beta.sd);
  lp += normal_logpdf(params[1], priors.intercept.mean, priors.intercept.sd);
  if (family == ParametricFamily::kWeibull) lp += log_shape_prior(priors.shape, params[2], nullptr);
  return std::isnan(lp) ? kNegInf : lp;
}

Eigen::VectorXd log_posterior_parametric_gradient(const TrialDataset& data, ParametricFamily family,
                                                  const ParametricPriorSpec& priors,
                                                  std::span<const double> params) {
  const std::size_t dim = param_count(family);
  const Eigen::Map<const Eigen::VectorXd> x(params.data(), static_cast<Eigen::Index>(dim));
  Eigen::VectorXd g;
  parametric_loglik(data, family, x, &g);
  g(0) += normal_dlog(priors.beta, params[0]);
  g(1) += normal_dlog(priors.intercept, params[1]);
  if (family == ParametricFamily::kWeibull) {
    double d = 0.0;
    log_shape_prior(priors.shape, params[2], &d);
    g(2) += d;
  }
  return g;
}

FitResult fit_parametric(const TrialDataset& data, ParametricFamily family,
                         const ParametricPriorSpec& priors, const McmcConfig& cfg,
                         const std::vector<double>& thresholds) {
  data.require_two_arms();
  priors.validate();
  cfg.validate();
  std::vector<std::string> warnings;
  if (auto w = time_scale_warning(data.max_time()); !w.empty()) warnings.push_back(std::move(w));

  const std::size_t dim = param_count(family);
  std::vector<double> init(dim, 0.0);
  std::vector<double> scales(dim, 0.1);
  try {
    const MleFit mle = parametric_mle(data, family);
    for (std::size_t i = 0; i < dim; ++i) {
      init[i] = mle.estimate(static_cast<Eigen::Index>(i));
      scales[i] = mle.standard_errors(static_cast<Eigen::Index>(i));
    }
    const NormalPosterior approx = conjugate_update(priors.beta, {mle.beta(), mle.beta_se()});
    init[0] = approx.mean;
    scales[0] = approx.sd;
  } catch (const ConvergenceError& e) {
    warnings.push_back(std::string("MLE start failed, using crude start: ") + e.what());
    const double crude = static_cast<double>(data.events()) /
                         (data.total_time(Arm::kControl) + data.total_time(Arm::kTreatment));
    init[1] = std::log(crude);
  }
  for (auto& s : scales)
    if (!(s > 0.0) || !std::isfinite(s)) s = 0.1;

  LogDensity lp = [&data, family, priors](std::span<const double> p) {
    return log_posterior_parametric(data, family, priors, p);
  };
  std::vector<std::size_t> all(dim);
  for (std::size_t i = 0; i < dim; ++i) all[i] = i;
  std::vector<Block> blocks{Block{all, {}, {}, scales, 10}};
  std::vector<std::string> names = {"beta", "intercept", "log_shape"};
  names.resize(dim);
  ChainSet chains = sample_gibbs(lp, init, std::move(blocks), cfg, names);
  return finish_fit(std::move(chains), thresholds,
                    family == ParametricFamily::kWeibull ? "weibull" : "exponential", std::move(warnings));
}

}  // namespace survbayes
