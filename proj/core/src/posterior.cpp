#include "survbayes/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "survbayes/errors.hpp"

namespace survbayes {

double empirical_quantile(std::vector<double> values, double p) {
  if (values.empty()) throw DataError("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

PosteriorSummary summarize_draws(std::span<const double> draws, const std::vector<double>& thresholds,
                                 double level) {
  if (draws.empty()) throw DataError("summarize_draws: no draws");
  PosteriorSummary s;
  const auto n = static_cast<double>(draws.size());
  s.mean = std::accumulate(draws.begin(), draws.end(), 0.0) / n;
  double ss = 0.0;
  for (double d : draws) ss += (d - s.mean) * (d - s.mean);
  s.sd = draws.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  std::vector<double> copy(draws.begin(), draws.end());
  std::sort(copy.begin(), copy.end());
  s.median = empirical_quantile(copy, 0.5);
  s.lower = empirical_quantile(copy, (1.0 - level) / 2.0);
  s.upper = empirical_quantile(copy, (1.0 + level) / 2.0);
  s.level = level;
  for (double c : thresholds) {
    const double cut = std::log(c);
    const auto above = std::count_if(copy.begin(), copy.end(), [cut](double b) { return b > cut; });
    s.tail.push_back(TailProbability{c, static_cast<double>(above) / n});
  }
  return s;
}

FitResult finish_fit(ChainSet chains, const std::vector<double>& thresholds, std::string model,
                     std::vector<std::string> warnings) {
  FitResult out;
  DiagnosticThresholds th;
  th.monitor = {"beta"};
  out.diagnostics = diagnose(chains, th);
  const auto beta = chains.pooled("beta");
  out.summary = summarize_draws(beta, thresholds);
  out.summary.model = std::move(model);
  out.summary.rhat = out.diagnostics["beta"].rhat;
  out.summary.ess_ratio = out.diagnostics["beta"].ess_ratio;
  out.summary.converged = out.diagnostics.pass;
  out.summary.verdict = out.diagnostics.verdict;
  out.chains = std::move(chains);
  out.warnings = std::move(warnings);
  return out;
}

std::string time_scale_warning(double max_time) {
  if (max_time <= 100.0) return {};
  return "maximum observed time exceeds 100; consider --time-scale to avoid overflow in the hazard";
}

}  // namespace survbayes
