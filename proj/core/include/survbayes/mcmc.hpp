#pragma once

// Blocked adaptive random-walk Metropolis with optional exact (Gibbs) block
// updates, multi-chain management, and split-Rhat / ESS convergence diagnostics.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "survbayes/rng.hpp"

namespace survbayes {

/// Log posterior density up to an additive constant; may return -infinity.
using LogDensity = std::function<double(std::span<const double>)>;

/// Overwrites the block's coordinates of `state` with a draw from their full
/// conditional distribution given the rest of `state`.
using ExactDraw = std::function<void(std::span<double> state, Rng& rng)>;

struct McmcConfig {
  std::size_t chains = 4;
  std::size_t iterations = 10000;  // per chain, burn-in included, before thinning
  double burnin_fraction = 0.5;
  std::size_t thin = 5;
  std::uint64_t seed = 1;
  bool parallel = true;  // one thread per chain

  std::size_t burnin() const;
  std::size_t saved_per_chain() const;
  /// Throws ConfigError unless every field is usable and at least one draw is saved.
  void validate() const;
};

struct Block {
  std::vector<std::size_t> indices;
  /// When set, the block is updated exactly instead of by Metropolis.
  ExactDraw exact;
  /// Optional log density for Metropolis moves on this block. It must differ from
  /// the full log posterior only by terms that do not involve the block.
  LogDensity conditional;
  /// Initial proposal standard deviation per coordinate (default 0.1).
  std::vector<double> initial_scales;
  /// Metropolis updates of this block per sweep.
  std::size_t steps = 1;
};

/// Per-chain draws after burn-in and thinning, stored chain-major.
class ChainSet {
 public:
  ChainSet() = default;
  ChainSet(std::vector<std::string> names, std::size_t chains, std::size_t saved);

  const std::vector<std::string>& names() const { return names_; }
  std::size_t chains() const { return chains_; }
  std::size_t saved() const { return saved_; }
  std::size_t dim() const { return names_.size(); }
  std::size_t index_of(const std::string& name) const;

  double& at(std::size_t chain, std::size_t iter, std::size_t param) {
    return draws_[(chain * saved_ + iter) * dim() + param];
  }
  double at(std::size_t chain, std::size_t iter, std::size_t param) const {
    return draws_[(chain * saved_ + iter) * dim() + param];
  }
  std::span<const double> raw() const { return draws_; }

  std::vector<double> chain_values(std::size_t chain, std::size_t param) const;
  /// All chains concatenated in chain order.
  std::vector<double> pooled(std::size_t param) const;
  std::vector<double> pooled(const std::string& name) const { return pooled(index_of(name)); }

  // Sampler metadata.
  std::vector<std::vector<double>> acceptance;   // [chain][block], post burn-in
  std::vector<std::vector<double>> scale_trace;  // [chain][iteration * blocks + block], log scale
  std::vector<std::size_t> iteration_number;     // absolute 1-based iteration of each saved draw
  std::optional<double> burnin_fraction;
  std::size_t blocks = 0;

  friend bool operator==(const ChainSet&, const ChainSet&) = default;

 private:
  std::vector<std::string> names_;
  std::size_t chains_ = 0;
  std::size_t saved_ = 0;
  std::vector<double> draws_;
};

/// Plain blocked random-walk Metropolis.
ChainSet sample(const LogDensity& logpost, std::vector<double> init,
                const std::vector<std::vector<std::size_t>>& blocks, const McmcConfig& cfg,
                std::vector<std::string> names = {});

/// Metropolis-within-Gibbs: blocks with an exact draw are sampled from their
/// conditional, the rest by adaptive Metropolis, scanning in block order.
ChainSet sample_gibbs(const LogDensity& logpost, std::vector<double> init, std::vector<Block> blocks,
                      const McmcConfig& cfg, std::vector<std::string> names = {});

void write_chains_csv(std::ostream& out, const ChainSet& chains);
/// Reads the chain, iteration, parameter... layout written by write_chains_csv.
/// Throws DataError for malformed input.
ChainSet read_chains_csv(std::istream& in);

struct DiagnosticThresholds {
  double max_rhat = 1.05;
  double min_ess_ratio = 0.5;
  std::size_t min_saved_per_chain = 1000;
  std::size_t min_chains = 4;
  double min_burnin_fraction = 0.5;  // checked only when the chain set records it
  /// Parameters judged for the pass flag; empty means all of them.
  std::vector<std::string> monitor;
};

struct ParameterDiagnostics {
  std::string name;
  std::optional<double> rhat;  // absent with fewer than two chains or zero variance
  double ess = 0.0;
  double ess_ratio = 0.0;
  std::string problem;  // empty when the statistics are well defined
};

struct Diagnostics {
  std::vector<ParameterDiagnostics> parameters;
  std::vector<std::string> failures;  // named criteria that were not met
  bool pass = false;
  std::string verdict;  // "pass", "insufficient chains" or "fail: ..."

  const ParameterDiagnostics& operator[](const std::string& name) const;
};

/// Split-Rhat per parameter and ESS (initial monotone sequence, summed over chains).
Diagnostics diagnose(const ChainSet& chains, const DiagnosticThresholds& thresholds = {});

/// Split-Rhat of chain matrices given as one vector per chain.
std::optional<double> split_rhat(const std::vector<std::vector<double>>& chains);
/// Geyer initial-monotone-sequence ESS of a single chain; 0 for a constant chain.
double ess_single_chain(std::span<const double> x);

}  // namespace survbayes
