#include "survbayes/pem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "survbayes/errors.hpp"
#include "survbayes/frequentist.hpp"
#include "survbayes/stats.hpp"

namespace survbayes {

std::size_t TimePartition::interval_of(double t) const {
  return static_cast<std::size_t>(std::lower_bound(cutpoints.begin(), cutpoints.end(), t) -
                                  cutpoints.begin());
}

double TimePartition::upper(std::size_t k) const {
  return k < cutpoints.size() ? cutpoints[k] : std::numeric_limits<double>::infinity();
}

TimePartition build_partition(const TrialDataset& data, PartitionMethod method, std::size_t intervals) {
  TimePartition part;
  part.method = method;
  std::vector<double> raw;
  if (method == PartitionMethod::kFailureTimes) {
    for (const auto& r : data.records())
      if (r.event) raw.push_back(r.time);
    std::sort(raw.begin(), raw.end());
  } else {
    if (intervals < 1) throw ConfigError("build_partition: need at least one interval");
    if (method == PartitionMethod::kQuantile) {
      std::vector<double> times;
      for (const auto& r : data.records()) times.push_back(r.time);
      std::sort(times.begin(), times.end());
      const std::size_t n = times.size();
      for (std::size_t k = 1; k < intervals; ++k) {
        const std::size_t num = k * n;
        if (num % intervals == 0) {
          const std::size_t j = num / intervals;  // 1-based order statistic
          raw.push_back(j < n ? 0.5 * (times[j - 1] + times[j]) : times[n - 1]);
        } else {
          raw.push_back(times[num / intervals]);  // ceil(k n / M), 1-based
        }
      }
    } else {
      double max_event = 0.0;
      for (const auto& r : data.records())
        if (r.event) max_event = std::max(max_event, r.time);
      for (std::size_t k = 1; k < intervals; ++k) {
        raw.push_back(max_event * static_cast<double>(k) / static_cast<double>(intervals));
      }
    }
  }
  // A cutpoint at or beyond the largest time would leave an interval nobody is at risk in.
  const double tmax = data.max_time();
  for (double c : raw) {
    if (c > 0.0 && c < tmax && (part.cutpoints.empty() || c > part.cutpoints.back())) part.cutpoints.push_back(c);
  }
  if (method != PartitionMethod::kFailureTimes && part.cutpoints.size() + 1 < intervals) {
    part.warnings.push_back("partition reduced from " + std::to_string(intervals) + " to " +
                            std::to_string(part.cutpoints.size() + 1) +
                            " intervals after removing duplicate cutpoints");
  }
  return part;
}

ExposureTable exposure_matrix(const TrialDataset& data, const TimePartition& partition) {
  ExposureTable t;
  t.subjects = data.size();
  t.intervals = partition.intervals();
  t.exposure.assign(t.subjects * t.intervals, 0.0);
  t.time_interval.resize(t.subjects);
  for (auto& v : t.events) v.assign(t.intervals, 0.0);
  for (auto& v : t.time_at_risk) v.assign(t.intervals, 0.0);
  for (std::size_t i = 0; i < t.subjects; ++i) {
    const auto& r = data.records()[i];
    const auto arm = static_cast<int>(r.arm);
    const std::size_t last = partition.interval_of(r.time);
    t.time_interval[i] = last;
    for (std::size_t k = 0; k <= last; ++k) {
      const double e = std::max(0.0, std::min(r.time, partition.upper(k)) - partition.lower(k));
      t.exposure[i * t.intervals + k] = e;
      t.time_at_risk[arm][k] += e;
    }
    if (r.event) t.events[arm][last] += 1.0;
  }
  return t;
}

double pem_loglik(const ExposureTable& table, const TrialDataset& data, double beta,
                  std::span<const double> rates) {
  if (rates.size() != table.intervals) throw std::invalid_argument("pem_loglik: wrong rate count");
  double ll = 0.0;
  for (std::size_t i = 0; i < table.subjects; ++i) {
    const auto& r = data.records()[i];
    const double z = r.z();
    if (r.event) ll += std::log(rates[table.time_interval[i]]) + beta * z;
    const double risk = std::exp(beta * z);
    for (std::size_t k = 0; k <= table.time_interval[i]; ++k) ll -= rates[k] * table.at(i, k) * risk;
  }
  return ll;
}

std::vector<double> pem_loglik_gradient(const ExposureTable& table, const TrialDataset& data, double beta,
                                        std::span<const double> rates) {
  std::vector<double> g(table.intervals + 1, 0.0);
  for (std::size_t i = 0; i < table.subjects; ++i) {
    const auto& r = data.records()[i];
    const double z = r.z();
    const double risk = std::exp(beta * z);
    if (r.event) {
      g[0] += z;
      g[1 + table.time_interval[i]] += 1.0 / rates[table.time_interval[i]];
    }
    for (std::size_t k = 0; k <= table.time_interval[i]; ++k) {
      g[0] -= rates[k] * table.at(i, k) * risk * z;
      g[1 + k] -= table.at(i, k) * risk;
    }
  }
  return g;
}

double poisson_trick_loglik(const TrialDataset& data, const TimePartition& partition, double beta,
                            std::span<const double> rates) {
  const ExposureTable table = exposure_matrix(data, partition);
  if (rates.size() != table.intervals) throw std::invalid_argument("poisson_trick_loglik: wrong rate count");
  double ll = 0.0;
  for (int arm = 0; arm < 2; ++arm) {
    for (std::size_t k = 0; k < table.intervals; ++k) {
      const double count = table.events[arm][k];
      const double mu = table.time_at_risk[arm][k] * rates[k] * std::exp(beta * arm);
      if (mu == 0.0) {
        if (count > 0.0) return kNegInf;
        continue;
      }
      ll += count * std::log(mu) - mu - std::lgamma(count + 1.0);
    }
  }
  return ll;
}

void PemPriorSpec::validate() const {
  if (!(r0 > 0.0)) throw ConfigError("pem prior r0 must be > 0");
  if (!(diffuse_shape > 0.0 && diffuse_rate > 0.0)) throw ConfigError("pem diffuse Gamma prior needs positive parameters");
  if (!(beta.sd > 0.0)) throw ConfigError("pem beta prior sd must be > 0");
}

FitResult fit_pem(const TrialDataset& data, const TimePartition& partition, const PemPriorSpec& priors,
                  const McmcConfig& cfg, const std::vector<double>& thresholds) {
  data.require_two_arms();
  priors.validate();
  cfg.validate();
  std::vector<std::string> warnings = partition.warnings;
  const ExposureTable table = exposure_matrix(data, partition);
  const std::size_t m = table.intervals;

  double h_hat = static_cast<double>(data.events()) /
                 (data.total_time(Arm::kControl) + data.total_time(Arm::kTreatment));
  double beta_start = 0.0;
  double beta_scale = 0.1;
  try {
    const MleFit mle = parametric_mle(data, ParametricFamily::kExponential);
    h_hat = std::exp(mle.value("log_rate"));
    const auto approx = conjugate_update(priors.beta, {mle.beta(), mle.beta_se()});
    beta_start = approx.mean;
    beta_scale = approx.sd;
  } catch (const ConvergenceError& e) {
    warnings.push_back(std::string("exponential MLE failed; using crude rate: ") + e.what());
  }

  std::vector<double> shape(m), rate(m);
  for (std::size_t k = 0; k < m; ++k) {
    if (priors.style == PemPriorSpec::Style::kMlCentered) {
      shape[k] = priors.r0 * h_hat;
      rate[k] = priors.r0;
    } else {
      shape[k] = priors.diffuse_shape;
      rate[k] = priors.diffuse_rate;
    }
    if (table.time_at_risk[0][k] + table.time_at_risk[1][k] == 0.0) {
      warnings.push_back("interval " + std::to_string(k + 1) + " has zero exposure; its rate follows the prior");
    }
  }
  if (auto w = time_scale_warning(data.max_time()); !w.empty()) warnings.push_back(std::move(w));

  double treated_events = 0.0;
  for (std::size_t k = 0; k < m; ++k) treated_events += table.events[1][k];

  // Everything except the beta-free data constant.
  LogDensity logpost = [=, &table, &data](std::span<const double> x) {
    const double beta = x[0];
    if (!std::isfinite(beta)) return kNegInf;
    double lp = normal_logpdf(beta, priors.beta.mean, priors.beta.sd);
    const auto rates = x.subspan(1);
    for (std::size_t k = 0; k < m; ++k) {
      if (!(rates[k] > 0.0)) return kNegInf;
      lp += gamma_logpdf(rates[k], shape[k], rate[k]);
    }
    return lp + pem_loglik(table, data, beta, rates);
  };
  // Rates integrate out in closed form, so beta moves on its marginal posterior
  //   prior(beta) e^{beta D1} prod_k (b_k + E0_k + E1_k e^beta)^{-(a_k + d_k)}
  // and the rates are then drawn given beta. Both moves leave the joint posterior invariant.
  LogDensity beta_marginal = [=, &table](std::span<const double> x) {
    const double beta = x[0];
    if (!std::isfinite(beta)) return kNegInf;
    double lp = normal_logpdf(beta, priors.beta.mean, priors.beta.sd) + treated_events * beta;
    const double risk = std::exp(beta);
    for (std::size_t k = 0; k < m; ++k) {
      const double a = shape[k] + table.events[0][k] + table.events[1][k];
      lp -= a * std::log(rate[k] + table.time_at_risk[0][k] + table.time_at_risk[1][k] * risk);
    }
    return std::isnan(lp) ? kNegInf : lp;
  };
  ExactDraw rates_draw = [=, &table](std::span<double> x, Rng& rng) {
    const double risk = std::exp(x[0]);
    for (std::size_t k = 0; k < m; ++k) {
      const double a = shape[k] + table.events[0][k] + table.events[1][k];
      const double b = rate[k] + table.time_at_risk[0][k] + table.time_at_risk[1][k] * risk;
      x[1 + k] = sample_gamma(rng, a, b);
    }
  };

  std::vector<double> init(m + 1);
  init[0] = priors.fixed_beta.value_or(beta_start);
  for (std::size_t k = 0; k < m; ++k) {
    const double a = shape[k] + table.events[0][k] + table.events[1][k];
    const double b = rate[k] + table.time_at_risk[0][k] + table.time_at_risk[1][k] * std::exp(init[0]);
    init[1 + k] = a / b;
  }

  std::vector<Block> blocks;
  if (priors.fixed_beta) {
    const double fixed = *priors.fixed_beta;
    blocks.push_back(Block{{0}, [fixed](std::span<double> x, Rng&) { x[0] = fixed; }, {}, {}});
  } else {
    blocks.push_back(Block{{0}, {}, beta_marginal, {beta_scale}, 3});
  }
  std::vector<std::size_t> rate_idx(m);
  for (std::size_t k = 0; k < m; ++k) rate_idx[k] = k + 1;
  blocks.push_back(Block{rate_idx, rates_draw, {}, {}});

  std::vector<std::string> names{"beta"};
  for (std::size_t k = 0; k < m; ++k) names.push_back("h" + std::to_string(k + 1));
  ChainSet chains = sample_gibbs(logpost, init, std::move(blocks), cfg, std::move(names));
  const char* label = partition.method == PartitionMethod::kFailureTimes ? "pem-failure-times"
                      : partition.method == PartitionMethod::kEqualWidth ? "pem-equal-width"
                                                                         : "pem-quantile";
  return finish_fit(std::move(chains), thresholds, label, std::move(warnings));
}

void write_rates_csv(std::ostream& out, const TimePartition& partition, const ExposureTable& table,
                     const ChainSet& chains) {
  out << "interval,lower,upper,events,exposure,mean,sd,q2.5,q97.5\n";
  for (std::size_t k = 0; k < partition.intervals(); ++k) {
    const auto draws = chains.pooled("h" + std::to_string(k + 1));
    const auto s = summarize_draws(draws, {});
    out << (k + 1) << ',' << partition.lower(k) << ',' << partition.upper(k) << ','
        << table.events[0][k] + table.events[1][k] << ','
        << table.time_at_risk[0][k] + table.time_at_risk[1][k] << ',' << s.mean << ',' << s.sd << ','
        << s.lower << ',' << s.upper << '\n';
  }
}

}  // namespace survbayes
