#include "survbayes/spline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "survbayes/errors.hpp"
#include "survbayes/frequentist.hpp"
#include "survbayes/mcmc.hpp"
#include "survbayes/stats.hpp"

namespace survbayes {

namespace {

// Integral of exp(l + m u) for u in [0, d].
double segment_integral(double l, double m, double d) {
  const double x = m * d;
  const double factor = std::abs(x) < 1e-12 ? 1.0 + 0.5 * x : std::expm1(x) / x;
  return std::exp(l) * d * factor;
}

}  // namespace

void SplineHazardSpec::validate() const {
  if (K < 2) throw ConfigError("spline: K must be >= 2");
  if (knots.size() != K - 1) {
    throw ConfigError("spline: expected " + std::to_string(K - 1) + " knots, got " + std::to_string(knots.size()));
  }
  for (std::size_t j = 0; j < knots.size(); ++j) {
    if (!(knots[j] > 0.0) || !std::isfinite(knots[j]) || (j > 0 && !(knots[j] > knots[j - 1]))) {
      throw ConfigError("spline: knots must be positive and strictly increasing");
    }
  }
  if (!(coef_sd > 0.0)) throw ConfigError("spline: coefficient prior sd must be > 0");
  if (!(sigma_lower > 0.0 && sigma_upper > sigma_lower)) throw ConfigError("spline: need 0 < sigma_lower < sigma_upper");
  if (!(beta.sd > 0.0)) throw ConfigError("spline: beta prior sd must be > 0");
}

SplineHazardSpec SplineHazardSpec::equally_spaced(const TrialDataset& data, std::size_t K) {
  SplineHazardSpec spec;
  spec.K = K;
  double max_event = 0.0;
  for (const auto& r : data.records())
    if (r.event) max_event = std::max(max_event, r.time);
  for (std::size_t k = 1; k < K; ++k) {
    spec.knots.push_back(max_event * static_cast<double>(k) / static_cast<double>(K));
  }
  return spec;
}

double spline_log_hazard(const SplineHazardSpec& spec, std::span<const double> coefs, double t) {
  double v = coefs[0] + coefs[1] * t;
  for (std::size_t j = 0; j < spec.knots.size(); ++j) {
    v += coefs[j + 2] * (std::abs(t - spec.knots[j]) - spec.knots[j]);
  }
  return v;
}

SplineBaseline::SplineBaseline(const SplineHazardSpec& spec, std::span<const double> coefs)
    : knots_(spec.knots) {
  const std::size_t segments = knots_.size() + 1;
  start_.resize(segments);
  log_start_.resize(segments);
  slope_.resize(segments);
  cum_start_.resize(segments);
  start_[0] = 0.0;
  for (std::size_t s = 1; s < segments; ++s) start_[s] = knots_[s - 1];
  double bend_sum = 0.0;
  for (std::size_t j = 0; j < knots_.size(); ++j) bend_sum += coefs[j + 2];
  // Left of knot j the basis term has slope -a, right of it +a.
  double slope = coefs[1] - bend_sum;
  for (std::size_t s = 0; s < segments; ++s) {
    if (s > 0) slope += 2.0 * coefs[s + 1];
    slope_[s] = slope;
    log_start_[s] = spline_log_hazard(spec, coefs, start_[s]);
  }
  cum_start_[0] = 0.0;
  for (std::size_t s = 1; s < segments; ++s) {
    cum_start_[s] = cum_start_[s - 1] +
                    segment_integral(log_start_[s - 1], slope_[s - 1], start_[s] - start_[s - 1]);
  }
}

std::size_t SplineBaseline::segment_of(double t) const {
  return static_cast<std::size_t>(std::upper_bound(knots_.begin(), knots_.end(), t) - knots_.begin());
}

double SplineBaseline::log_hazard(double t, std::size_t s) const {
  return log_start_[s] + slope_[s] * (t - start_[s]);
}

double SplineBaseline::cumulative(double t, std::size_t s) const {
  return cum_start_[s] + segment_integral(log_start_[s], slope_[s], t - start_[s]);
}

double spline_cumulative_hazard(const SplineHazardSpec& spec, std::span<const double> coefs, double t) {
  if (t <= 0.0) return 0.0;
  const SplineBaseline base(spec, coefs);
  return base.cumulative(t, base.segment_of(t));
}

double spline_loglik(const TrialDataset& data, const SplineHazardSpec& spec, double beta,
                     std::span<const double> coefs) {
  const SplineBaseline base(spec, coefs);
  double ll = 0.0;
  for (const auto& r : data.records()) {
    const std::size_t s = base.segment_of(r.time);
    const double eta = beta * r.z();
    if (r.event) ll += base.log_hazard(r.time, s) + eta;
    ll -= std::exp(eta) * base.cumulative(r.time, s);
  }
  return std::isfinite(ll) ? ll : kNegInf;
}

namespace {

double bend_prior(std::span<const double> bends, double log_sigma, const SplineHazardSpec& spec) {
  const double sigma = std::exp(log_sigma);
  if (!(sigma >= spec.sigma_lower && sigma <= spec.sigma_upper)) return kNegInf;
  double lp = log_sigma;  // uniform prior on sigma, sampled on the log scale
  for (double a : bends) lp += normal_logpdf(a, 0.0, sigma);
  return lp;
}

}  // namespace

double spline_log_posterior(const TrialDataset& data, const SplineHazardSpec& spec,
                            std::span<const double> params) {
  for (double v : params)
    if (!std::isfinite(v)) return kNegInf;
  const std::size_t K = spec.K;
  const auto coefs = params.subspan(1, K + 1);
  double lp = bend_prior(coefs.subspan(2), params[K + 2], spec);
  if (!std::isfinite(lp)) return kNegInf;
  lp += normal_logpdf(params[0], spec.beta.mean, spec.beta.sd);
  lp += normal_logpdf(coefs[0], 0.0, spec.coef_sd) + normal_logpdf(coefs[1], 0.0, spec.coef_sd);
  return lp + spline_loglik(data, spec, params[0], coefs);
}

FitResult fit_spline_hazard(const TrialDataset& data, const SplineHazardSpec& spec, const McmcConfig& cfg,
                            const std::vector<double>& thresholds) {
  data.require_two_arms();
  spec.validate();
  cfg.validate();
  std::vector<std::string> warnings;
  if (auto w = time_scale_warning(data.max_time()); !w.empty()) warnings.push_back(std::move(w));

  const std::size_t K = spec.K;
  const std::size_t dim = K + 3;
  std::vector<double> init(dim, 0.0);
  double beta_scale = 0.1;
  try {
    const MleFit cox = cox_fit(data);
    const auto approx = conjugate_update(spec.beta, {cox.beta(), cox.beta_se()});
    init[0] = approx.mean;
    beta_scale = approx.sd;
  } catch (const Error& e) {
    warnings.push_back(std::string("Cox start failed: ") + e.what());
  }
  const double crude = static_cast<double>(data.events()) /
                       (data.total_time(Arm::kControl) + data.total_time(Arm::kTreatment));
  init[1] = std::log(crude);
  init[K + 2] = std::log(std::clamp(0.1, spec.sigma_lower, spec.sigma_upper));

  // The sampler sees c = a0 + w beta with w the treated share of events, which is
  // nearly uncorrelated with beta; draws are mapped back to a0 afterwards.
  const double w = static_cast<double>(data.events(Arm::kTreatment)) / static_cast<double>(data.events());
  init[1] += w * init[0];
  const double tmax = data.max_time();
  LogDensity logpost = [&data, spec, w](std::span<const double> p) {
    thread_local std::vector<double> x;
    x.assign(p.begin(), p.end());
    x[1] -= w * x[0];
    const double lp = spline_log_posterior(data, spec, x);
    return std::isnan(lp) ? kNegInf : lp;
  };
  LogDensity sigma_conditional = [spec, K](std::span<const double> p) {
    if (!std::isfinite(p[K + 2])) return kNegInf;
    return bend_prior(p.subspan(3, K - 1), p[K + 2], spec);
  };
  std::vector<std::size_t> bend_idx(K + 1);
  std::iota(bend_idx.begin(), bend_idx.end(), std::size_t{1});
  std::vector<double> bend_scales(K + 1, 0.02);
  bend_scales[0] = 0.1;
  bend_scales[1] = 0.1 / tmax;
  std::vector<Block> blocks;
  blocks.push_back(Block{{0}, {}, {}, {beta_scale}, 3});
  blocks.push_back(Block{bend_idx, {}, {}, bend_scales, 2});
  blocks.push_back(Block{{K + 2}, {}, sigma_conditional, {0.5}});

  std::vector<std::string> names{"beta", "a0", "a1"};
  for (std::size_t k = 2; k <= K; ++k) names.push_back("a" + std::to_string(k));
  names.push_back("log_sigma");
  ChainSet chains;
  try {
    chains = sample_gibbs(logpost, init, std::move(blocks), cfg, std::move(names));
  } catch (const NumericError& e) {
    throw NumericError(std::string(e.what()) +
                       "; the log hazard may overflow, try rescaling times with --time-scale");
  }
  for (std::size_t c = 0; c < chains.chains(); ++c)
    for (std::size_t i = 0; i < chains.saved(); ++i) chains.at(c, i, 1) -= w * chains.at(c, i, 0);
  return finish_fit(std::move(chains), thresholds, "spline", std::move(warnings));
}

std::vector<SplineGridPoint> spline_grid_search(const TrialDataset& data, const std::vector<std::size_t>& Ks,
                                                const McmcConfig& cfg) {
  std::vector<SplineGridPoint> out;
  for (std::size_t K : Ks) {
    const SplineHazardSpec spec = SplineHazardSpec::equally_spaced(data, K);
    const FitResult fit = fit_spline_hazard(data, spec, cfg, {});
    std::vector<double> mean(fit.chains.dim());
    for (std::size_t d = 0; d < mean.size(); ++d) {
      const auto v = fit.chains.pooled(d);
      mean[d] = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    }
    SplineGridPoint g;
    g.K = K;
    g.beta_mean = mean[0];
    g.deviance = -2.0 * spline_loglik(data, spec, mean[0], std::span<const double>(mean).subspan(1, K + 1));
    g.criterion = g.deviance + static_cast<double>(K);
    out.push_back(g);
  }
  return out;
}

}  // namespace survbayes
