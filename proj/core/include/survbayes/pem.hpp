#pragma once

// Piecewise exponential (piecewise constant baseline hazard) PH models.
// Intervals are left-open, right-closed: I_k = (d_{k-1}, d_k], d_0 = 0, d_M = inf.

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "survbayes/conjugate.hpp"
#include "survbayes/data.hpp"
#include "survbayes/mcmc.hpp"
#include "survbayes/posterior.hpp"

namespace survbayes {

enum class PartitionMethod { kQuantile, kEqualWidth, kFailureTimes };

struct TimePartition {
  std::vector<double> cutpoints;  // strictly increasing interior cutpoints
  PartitionMethod method = PartitionMethod::kQuantile;
  std::vector<std::string> warnings;

  std::size_t intervals() const { return cutpoints.size() + 1; }
  /// 0-based interval containing t under the (d_{k-1}, d_k] convention.
  std::size_t interval_of(double t) const;
  double lower(std::size_t k) const { return k == 0 ? 0.0 : cutpoints[k - 1]; }
  double upper(std::size_t k) const;
};

/// quantile: d_k is the k/M empirical quantile of the observed times, taking the
/// order statistic at ceil(k n / M) and averaging neighbours when k n / M is an
/// integer; duplicates are dropped with a warning. equal_width: d_k = k T / M with
/// T the largest event time. failure_times: every distinct event time (M ignored).
/// Cutpoints at or beyond the largest observed time are discarded.
TimePartition build_partition(const TrialDataset& data, PartitionMethod method, std::size_t intervals);

/// Per-subject, per-interval time at risk and the interval holding each observed time.
struct ExposureTable {
  std::size_t subjects = 0;
  std::size_t intervals = 0;
  std::vector<double> exposure;            // subjects x intervals, row-major
  std::vector<std::size_t> time_interval;  // interval containing each subject's time
  // Aggregates by (interval, arm).
  std::vector<double> events[2];
  std::vector<double> time_at_risk[2];

  double at(std::size_t subject, std::size_t interval) const {
    return exposure[subject * intervals + interval];
  }
};

ExposureTable exposure_matrix(const TrialDataset& data, const TimePartition& partition);

/// sum_i delta_i (log h_k(i) + beta Z_i) - sum_k h_k sum_i E_ik e^{beta Z_i}.
double pem_loglik(const ExposureTable& table, const TrialDataset& data, double beta,
                  std::span<const double> rates);
/// d/d(beta, h_1..h_M) of pem_loglik.
std::vector<double> pem_loglik_gradient(const ExposureTable& table, const TrialDataset& data, double beta,
                                        std::span<const double> rates);

/// Poisson log-likelihood of the (interval, arm) event counts with mean
/// exposure * h_k * e^{beta Z}, including the log factorial terms.
double poisson_trick_loglik(const TrialDataset& data, const TimePartition& partition, double beta,
                            std::span<const double> rates);

struct PemPriorSpec {
  enum class Style { kMlCentered, kDiffuse };
  Style style = Style::kMlCentered;
  double r0 = 1.0;            // ml_centered: h_k ~ Gamma(r0 * h_hat, r0)
  double diffuse_shape = 0.1;  // diffuse: h_k ~ Gamma(shape, rate)
  double diffuse_rate = 0.1;
  NormalPrior beta{0.0, 316.22776601683796, {}};  // N(0, 1e5)
  std::optional<double> fixed_beta;  // holds beta constant when set

  void validate() const;
};

/// Metropolis-within-Gibbs: each h_k is drawn exactly from
/// Gamma(a_k + d_k, b_k + sum_i E_ik e^{beta Z_i}); beta moves by Metropolis on
/// its marginal posterior with the rates integrated out.
FitResult fit_pem(const TrialDataset& data, const TimePartition& partition, const PemPriorSpec& priors,
                  const McmcConfig& cfg, const std::vector<double>& thresholds = {1.5});

/// interval,lower,upper,events,exposure,mean,sd,q2.5,q97.5 for each h_k.
void write_rates_csv(std::ostream& out, const TimePartition& partition, const ExposureTable& table,
                     const ChainSet& chains);

}  // namespace survbayes
