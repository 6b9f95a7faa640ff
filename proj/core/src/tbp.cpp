#include "survbayes/tbp.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>

#include "survbayes/errors.hpp"
#include "survbayes/frequentist.hpp"
#include "survbayes/mcmc.hpp"
#include "survbayes/stats.hpp"

namespace survbayes {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;

// Binomial(n, x) probabilities for k = 0..n, by recurrence from the larger end.
void binomial_pmf(double x, double xbar, std::size_t n, std::span<double> out) {
  if (x <= 0.0) {
    std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(n + 1), 0.0);
    out[0] = 1.0;
    return;
  }
  if (xbar <= 0.0) {
    std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(n + 1), 0.0);
    out[n] = 1.0;
    return;
  }
  const double nd = static_cast<double>(n);
  if (x < 0.5) {
    const double ratio = x / xbar;
    out[0] = std::exp(nd * std::log1p(-x));
    for (std::size_t k = 0; k < n; ++k) {
      out[k + 1] = out[k] * ((nd - static_cast<double>(k)) / static_cast<double>(k + 1)) * ratio;
    }
  } else {
    const double ratio = xbar / x;
    out[n] = std::exp(nd * std::log(x));
    for (std::size_t k = n; k > 0; --k) {
      out[k - 1] = out[k] * (static_cast<double>(k) / (nd - static_cast<double>(k) + 1.0)) * ratio;
    }
  }
}

double dirichlet_logpdf(std::span<const double> w, double alpha) {
  const auto L = static_cast<double>(w.size());
  double s = std::lgamma(L * alpha) - L * std::lgamma(alpha);
  for (double v : w) s += (alpha - 1.0) * std::log(v);
  return s;
}

double bivariate_normal_logpdf(const Eigen::Vector2d& x, const Eigen::Vector2d& mean,
                               const Eigen::Matrix2d& cov) {
  const Eigen::Vector2d d = x - mean;
  const double det = cov.determinant();
  return -0.5 * d.dot(cov.inverse() * d) - 0.5 * std::log(det) - 2.0 * kLogSqrt2Pi;
}

}  // namespace

CenteringFamily parse_centering(std::string_view name) {
  if (name == "weibull") return CenteringFamily::kWeibull;
  if (name == "loglogistic") return CenteringFamily::kLogLogistic;
  if (name == "lognormal") return CenteringFamily::kLogNormal;
  throw ConfigError("unknown centering family '" + std::string(name) +
                    "' (valid: weibull, loglogistic, lognormal)");
}

std::string_view centering_name(CenteringFamily family) {
  switch (family) {
    case CenteringFamily::kWeibull: return "weibull";
    case CenteringFamily::kLogLogistic: return "loglogistic";
    case CenteringFamily::kLogNormal: return "lognormal";
  }
  return "weibull";
}

CenteringValue evaluate_centering(CenteringFamily family, double theta1, double theta2, double t) {
  CenteringValue v;
  if (t <= 0.0) {
    v.survival = 1.0;
    v.cdf = 0.0;
    v.log_density = kNegInf;
    return v;
  }
  const double a = std::exp(theta2);
  const double log_t = std::log(t);
  if (family == CenteringFamily::kLogNormal) {
    const double z = (log_t + theta1) * a;
    v.survival = normal_sf(z);
    v.cdf = normal_cdf(z);
    v.log_density = -0.5 * z * z - kLogSqrt2Pi + theta2 - log_t;
    return v;
  }
  const double log_u = a * (theta1 + log_t);
  const double u = std::exp(log_u);
  if (family == CenteringFamily::kWeibull) {
    v.survival = std::exp(-u);
    v.cdf = -std::expm1(-u);
    v.log_density = theta2 + log_u - log_t - u;
  } else {
    v.survival = 1.0 / (1.0 + u);
    v.cdf = u / (1.0 + u);
    if (std::isinf(u)) v.cdf = 1.0;
    v.log_density = theta2 + log_u - log_t - 2.0 * std::log1p(u);
  }
  return v;
}

void TbpSpec::validate() const {
  if (L < 1) throw ConfigError("tbp: L must be >= 1");
  if (!(a0 > 0.0 && b0 > 0.0)) throw ConfigError("tbp: a0 and b0 must be > 0");
  if (fixed_alpha && !(*fixed_alpha > 0.0)) throw ConfigError("tbp: fixed alpha must be > 0");
  if (!(beta.sd > 0.0)) throw ConfigError("tbp: beta prior sd must be > 0");
  Eigen::LLT<Eigen::Matrix2d> llt(V0);
  if (llt.info() != Eigen::Success || (V0 - V0.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw ConfigError("tbp: V0 must be symmetric positive definite");
  }
}

TbpState TbpState::equal_weights(std::size_t L, double theta1, double theta2, double beta) {
  TbpState s;
  s.weights.assign(L, 1.0 / static_cast<double>(L));
  s.theta1 = theta1;
  s.theta2 = theta2;
  s.beta = beta;
  return s;
}

void bernstein_basis(double x, double xbar, std::size_t L, std::span<double> cdf, std::span<double> pdf) {
  // I(x | j, L-j+1) = Pr(Binomial(L, x) >= j), and the beta(j, L-j+1) density equals
  // L * Binomial(L-1, x) pmf at j-1 = j * Binomial(L, x) pmf at j / x.
  thread_local std::vector<double> pmf;
  pmf.resize(L + 1);
  binomial_pmf(x, xbar, L, pmf);
  double tail = 0.0;
  for (std::size_t j = L; j >= 1; --j) {
    tail += pmf[j];
    cdf[j - 1] = std::min(tail, 1.0);
  }
  if (pdf.empty()) return;
  if (x > 1e-250) {
    for (std::size_t j = 1; j <= L; ++j) pdf[j - 1] = static_cast<double>(j) * pmf[j] / x;
  } else {
    binomial_pmf(x, xbar, L - 1, pmf);
    for (std::size_t j = 1; j <= L; ++j) pdf[j - 1] = static_cast<double>(L) * pmf[j - 1];
  }
}

void TbpBasis::compute(const TrialDataset& data, const TbpSpec& spec, double theta1, double theta2) {
  L = spec.L;
  if (times.empty()) {
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto& recs = data.records();
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return recs[a].time < recs[b].time; });
    for (std::size_t i : order) {
      const auto& r = recs[i];
      if (times.empty() || times.back() != r.time) {
        times.push_back(r.time);
        control.push_back(0.0);
        treated.push_back(0.0);
        events.push_back(0.0);
      }
      (r.arm == Arm::kTreatment ? treated : control).back() += 1.0;
      if (r.event) {
        events.back() += 1.0;
        if (r.arm == Arm::kTreatment) treated_events += 1.0;
      }
    }
  }
  const std::size_t u = times.size();
  cdf.resize(u * L);
  pdf.resize(u * L);
  sum_log_f = 0.0;
  for (std::size_t i = 0; i < u; ++i) {
    const auto c = evaluate_centering(spec.centering, theta1, theta2, times[i]);
    const std::span<double> row_pdf = events[i] > 0.0 ? std::span<double>(pdf).subspan(i * L, L) : std::span<double>();
    bernstein_basis(c.survival, c.cdf, L, std::span<double>(cdf).subspan(i * L, L), row_pdf);
    if (events[i] > 0.0) sum_log_f += events[i] * c.log_density;
  }
}

TbpBasis::Sums TbpBasis::sums(std::span<const double> weights) const {
  Sums out;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double* row = cdf.data() + i * L;
    double s0 = 0.0;
    for (std::size_t j = 0; j < L; ++j) s0 += weights[j] * row[j];
    const double log_s0 = std::log(s0);
    out.control += (control[i] - events[i]) * log_s0;
    out.treated += treated[i] * log_s0;
    if (events[i] > 0.0) {
      const double* prow = pdf.data() + i * L;
      double mix = 0.0;
      for (std::size_t j = 0; j < L; ++j) mix += weights[j] * prow[j];
      out.mix += events[i] * std::log(mix);
    }
  }
  return out;
}

double TbpBasis::loglik(const Sums& sums, double beta) const {
  // Each subject contributes e^{beta Z} log S0(t), events add log f0(t) - log S0(t) + beta Z.
  const double ll = beta * treated_events + sum_log_f + sums.control + std::exp(beta) * sums.treated + sums.mix;
  return std::isnan(ll) ? kNegInf : ll;
}

double TbpBasis::loglik(std::span<const double> weights, double beta) const { return loglik(sums(weights), beta); }

double tbp_survival(const TbpState& state, const TbpSpec& spec, double t) {
  if (t <= 0.0) return 1.0;
  const auto c = evaluate_centering(spec.centering, state.theta1, state.theta2, t);
  std::vector<double> cdf(spec.L);
  bernstein_basis(c.survival, c.cdf, spec.L, cdf, {});
  double s = 0.0;
  for (std::size_t j = 0; j < spec.L; ++j) s += state.weights[j] * cdf[j];
  return s;
}

double tbp_density(const TbpState& state, const TbpSpec& spec, double t) {
  if (t <= 0.0) return 0.0;
  const auto c = evaluate_centering(spec.centering, state.theta1, state.theta2, t);
  std::vector<double> cdf(spec.L), pdf(spec.L);
  bernstein_basis(c.survival, c.cdf, spec.L, cdf, pdf);
  double mix = 0.0;
  for (std::size_t j = 0; j < spec.L; ++j) mix += state.weights[j] * pdf[j];
  return mix * std::exp(c.log_density);
}

double tbp_hazard(const TbpState& state, const TbpSpec& spec, double t) {
  return tbp_density(state, spec, t) / tbp_survival(state, spec, t);
}

double tbp_loglik(const TrialDataset& data, const TbpSpec& spec, const TbpState& state) {
  TbpBasis basis;
  basis.compute(data, spec, state.theta1, state.theta2);
  return basis.loglik(state.weights, state.beta);
}

namespace {

double log_prior(const TbpSpec& spec, const TbpState& state) {
  double lp = normal_logpdf(state.beta, spec.beta.mean, spec.beta.sd);
  lp += bivariate_normal_logpdf({state.theta1, state.theta2}, spec.theta0, spec.V0);
  if (spec.L > 1) lp += dirichlet_logpdf(state.weights, state.alpha);
  if (!spec.fixed_alpha) lp += gamma_logpdf(state.alpha, spec.a0, spec.b0);
  return lp;
}

}  // namespace

double tbp_log_posterior(const TrialDataset& data, const TbpSpec& spec, const TbpState& state) {
  double lp = tbp_loglik(data, spec, state);
  if (!std::isfinite(lp)) return kNegInf;
  lp += log_prior(spec, state);
  return std::isnan(lp) ? kNegInf : lp;
}

std::vector<double> weights_from_logits(std::span<const double> z) {
  double mx = 0.0;
  for (double v : z) mx = std::max(mx, v);
  std::vector<double> w(z.size() + 1);
  double total = std::exp(-mx);
  for (std::size_t j = 0; j < z.size(); ++j) {
    w[j] = std::exp(z[j] - mx);
    total += w[j];
  }
  w.back() = std::exp(-mx);
  for (auto& v : w) v /= total;
  return w;
}

std::vector<double> logits_from_weights(std::span<const double> w) {
  std::vector<double> z(w.size() - 1);
  for (std::size_t j = 0; j + 1 < w.size(); ++j) z[j] = std::log(w[j] / w.back());
  return z;
}

TbpState tbp_state_from_params(std::span<const double> params, std::size_t L) {
  TbpState s;
  s.beta = params[0];
  s.theta1 = params[1];
  s.theta2 = params[2];
  s.alpha = std::exp(params[3]);
  s.weights = weights_from_logits(params.subspan(4, L - 1));
  return s;
}

namespace {

double log_posterior_unconstrained(const TrialDataset& data, const TbpSpec& spec, std::span<const double> params,
                                   TbpBasis& basis, bool refresh_basis, const TbpBasis::Sums* sums = nullptr) {
  for (double v : params)
    if (!std::isfinite(v)) return kNegInf;
  const TbpState s = tbp_state_from_params(params, spec.L);
  double lp = 0.0;
  if (!spec.fixed_alpha) lp += params[3];  // d alpha / d log alpha
  for (double w : s.weights) {
    if (!(w > 0.0)) return kNegInf;
    if (spec.L > 1) lp += std::log(w);
  }
  lp += log_prior(spec, s);
  if (!std::isfinite(lp)) return kNegInf;
  if (refresh_basis) basis.compute(data, spec, s.theta1, s.theta2);
  lp += sums ? basis.loglik(*sums, s.beta) : basis.loglik(s.weights, s.beta);
  return std::isnan(lp) ? kNegInf : lp;
}

}  // namespace

double tbp_log_posterior_unconstrained(const TrialDataset& data, const TbpSpec& spec,
                                       std::span<const double> params) {
  TbpBasis basis;
  return log_posterior_unconstrained(data, spec, params, basis, true);
}

TbpSpec tbp_spec_from_mle(const TrialDataset& data, CenteringFamily family, std::size_t L) {
  TbpSpec spec;
  spec.L = L;
  spec.centering = family;
  TbpSpec one = spec;
  one.L = 1;

  Eigen::VectorXd start(3);
  const double crude = static_cast<double>(data.events()) /
                       (data.total_time(Arm::kControl) + data.total_time(Arm::kTreatment));
  start << 0.0, std::log(crude), 0.0;
  if (family == CenteringFamily::kWeibull) {
    const MleFit w = parametric_mle(data, ParametricFamily::kWeibull);
    const double shape = std::exp(w.value("log_shape"));
    start << w.beta(), w.value("log_rate") / shape, w.value("log_shape");
  } else if (family == CenteringFamily::kLogNormal) {
    // Median of S_theta is exp(-theta1); start at the median of observed times.
    std::vector<double> times;
    for (const auto& r : data.records()) times.push_back(r.time);
    start(1) = -std::log(empirical_quantile(times, 0.5));
  }
  auto loglik = [&](const Eigen::VectorXd& p) {
    TbpState s = TbpState::equal_weights(1, p(1), p(2), p(0));
    return tbp_loglik(data, one, s);
  };
  const MleFit fit = maximize_numeric(loglik, start, {"beta", "theta1", "theta2"}, MleOptions{200, 1e-6, 1e-10});
  spec.theta0 = fit.estimate.segment<2>(1);
  Eigen::Matrix2d v = fit.covariance.block<2, 2>(1, 1);
  spec.V0 = 0.5 * (v + v.transpose());
  return spec;
}

FitResult fit_tbp(const TrialDataset& data, const TbpSpec& spec, const McmcConfig& cfg,
                  const std::vector<double>& thresholds) {
  data.require_two_arms();
  spec.validate();
  cfg.validate();
  std::vector<std::string> warnings;
  if (auto w = time_scale_warning(data.max_time()); !w.empty()) warnings.push_back(std::move(w));

  const std::size_t L = spec.L;
  std::vector<double> init(4 + (L - 1), 0.0);
  double beta_scale = 0.1;
  try {
    const MleFit cox = cox_fit(data);
    const auto approx = conjugate_update(spec.beta, {cox.beta(), cox.beta_se()});
    init[0] = approx.mean;
    beta_scale = approx.sd;
  } catch (const Error& e) {
    warnings.push_back(std::string("Cox start failed: ") + e.what());
  }
  init[1] = spec.theta0(0);
  init[2] = spec.theta0(1);
  init[3] = std::log(spec.fixed_alpha.value_or(spec.a0 / spec.b0));

  // Weight, alpha and beta moves leave the centering unchanged and beta moves leave the
  // weighted sums unchanged, so each thread keeps both for the last values it evaluated.
  static std::atomic<std::uint64_t> fit_counter{0};
  const std::uint64_t fit_id = ++fit_counter;
  LogDensity logpost = [&data, spec, fit_id](std::span<const double> p) {
    thread_local TbpBasis basis;
    thread_local std::uint64_t cached_fit = 0;
    thread_local double cached_theta1 = 0.0, cached_theta2 = 0.0;
    thread_local std::vector<double> cached_z;
    thread_local TbpBasis::Sums cached_sums;
    const bool refresh = cached_fit != fit_id || p[1] != cached_theta1 || p[2] != cached_theta2;
    if (refresh) {
      if (!std::isfinite(p[1]) || !std::isfinite(p[2])) return kNegInf;
      if (cached_fit != fit_id) basis = TbpBasis{};
      basis.compute(data, spec, p[1], p[2]);
      cached_fit = fit_id;
      cached_theta1 = p[1];
      cached_theta2 = p[2];
      cached_z.clear();
    }
    const auto z = p.subspan(4);
    if (cached_z.size() != z.size() || !std::equal(z.begin(), z.end(), cached_z.begin())) {
      for (double v : z)
        if (!std::isfinite(v)) return kNegInf;
      cached_sums = basis.sums(weights_from_logits(z));
      cached_z.assign(z.begin(), z.end());
    }
    return log_posterior_unconstrained(data, spec, p, basis, false, &cached_sums);
  };
  std::vector<Block> blocks;
  blocks.push_back(Block{{1, 2}, {}, {}, {std::sqrt(spec.V0(0, 0)), std::sqrt(spec.V0(1, 1))}});
  if (spec.fixed_alpha) {
    const double fixed = std::log(*spec.fixed_alpha);
    blocks.push_back(Block{{3}, [fixed](std::span<double> x, Rng&) { x[3] = fixed; }, {}, {}});
  } else {
    // alpha only enters through its prior and the Dirichlet density of the weights.
    LogDensity alpha_conditional = [spec](std::span<const double> p) {
      if (!std::isfinite(p[3])) return kNegInf;
      const double alpha = std::exp(p[3]);
      double lp = gamma_logpdf(alpha, spec.a0, spec.b0) + p[3];
      if (spec.L > 1) lp += dirichlet_logpdf(weights_from_logits(p.subspan(4, spec.L - 1)), alpha);
      return std::isnan(lp) ? kNegInf : lp;
    };
    blocks.push_back(Block{{3}, {}, alpha_conditional, {0.5}});
  }
  // beta and weight moves reuse the cached basis, so they are repeated within a sweep
  blocks.push_back(Block{{0}, {}, {}, {beta_scale}, 8});
  if (L > 1) {
    std::vector<std::size_t> idx(L - 1);
    std::iota(idx.begin(), idx.end(), std::size_t{4});
    blocks.push_back(Block{idx, {}, {}, std::vector<double>(L - 1, 0.3), 4});
  }

  std::vector<std::string> names{"beta", "theta1", "theta2", "log_alpha"};
  for (std::size_t j = 1; j < L; ++j) names.push_back("z" + std::to_string(j));
  ChainSet chains = sample_gibbs(logpost, init, std::move(blocks), cfg, std::move(names));
  return finish_fit(std::move(chains), thresholds, "tbp-" + std::string(centering_name(spec.centering)),
                    std::move(warnings));
}

}  // namespace survbayes
