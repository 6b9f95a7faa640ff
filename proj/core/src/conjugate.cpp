#include "survbayes/conjugate.hpp"

#include <cmath>
#include <stdexcept>

#include "survbayes/errors.hpp"
#include "survbayes/stats.hpp"

namespace survbayes {

double implicit_sample_size(double alpha, double power, double p, double mu) {
  if (!(alpha > 0.0 && alpha < 1.0) || !(power > 0.0 && power < 1.0) || !(p > 0.0 && p < 1.0)) {
    throw ConfigError("implicit_sample_size: alpha, power and p must lie in (0, 1)");
  }
  if (mu == 0.0 || !std::isfinite(mu)) {
    throw ConfigError("implicit_sample_size: design log-HR must be non-zero");
  }
  const double z = normal_quantile(power) + normal_quantile(1.0 - alpha / 2.0);
  return z * z / (p * p * mu * mu);
}

NormalPrior prior_from_n0(double mean, double n0) {
  if (!(n0 > 0.0)) throw ConfigError("prior_from_n0: n0 must be > 0");
  return NormalPrior{mean, std::sqrt(4.0 / n0), n0};
}

NormalPosterior conjugate_update(const NormalPrior& prior, const NormalLikelihoodSummary& like) {
  if (!(like.sd > 0.0)) throw ConfigError("conjugate_update: likelihood sd must be > 0");
  if (!(prior.sd > 0.0)) throw ConfigError("conjugate_update: prior sd must be > 0");
  if (std::isinf(prior.sd)) return NormalPosterior{like.estimate, like.sd};
  const double v0 = prior.sd * prior.sd;
  const double v = like.sd * like.sd;
  const double mean = (prior.mean * v + like.estimate * v0) / (v + v0);
  const double var = v * v0 / (v + v0);
  return NormalPosterior{mean, std::sqrt(var)};
}

double prob_hr_exceeds(const NormalPosterior& post, double threshold_hr) {
  if (!(threshold_hr > 0.0)) throw ConfigError("prob_hr_exceeds: threshold must be > 0");
  return normal_sf((std::log(threshold_hr) - post.mean) / post.sd);
}

std::pair<double, double> credible_interval(const NormalPosterior& post, double level) {
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("credible_interval: level must lie in (0, 1)");
  const double z = normal_quantile(0.5 + level / 2.0);
  return {post.mean - z * post.sd, post.mean + z * post.sd};
}

}  // namespace survbayes
