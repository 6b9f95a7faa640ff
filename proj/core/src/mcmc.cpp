#include "survbayes/mcmc.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <exception>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include "survbayes/errors.hpp"
#include "survbayes/stats.hpp"

namespace survbayes {

std::size_t McmcConfig::burnin() const {
  return static_cast<std::size_t>(std::floor(static_cast<double>(iterations) * burnin_fraction));
}

std::size_t McmcConfig::saved_per_chain() const {
  if (thin == 0) return 0;
  return static_cast<std::size_t>(
      std::floor(static_cast<double>(iterations) * (1.0 - burnin_fraction) / static_cast<double>(thin)));
}

void McmcConfig::validate() const {
  if (chains == 0) throw ConfigError("mcmc: chains must be >= 1");
  if (iterations == 0) throw ConfigError("mcmc: iterations must be >= 1");
  if (!(burnin_fraction > 0.0 && burnin_fraction < 1.0)) {
    throw ConfigError("mcmc: burnin_fraction must lie in (0, 1)");
  }
  if (thin == 0) throw ConfigError("mcmc: thin must be >= 1");
  if (saved_per_chain() < 1) throw ConfigError("mcmc: configuration saves no draws");
  if (burnin() + saved_per_chain() * thin > iterations) {
    throw ConfigError("mcmc: saved draws exceed post burn-in iterations");
  }
}

ChainSet::ChainSet(std::vector<std::string> names, std::size_t chains, std::size_t saved)
    : names_(std::move(names)), chains_(chains), saved_(saved), draws_(chains * saved * names_.size()) {}

std::size_t ChainSet::index_of(const std::string& name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw std::out_of_range("no parameter named " + name);
  return static_cast<std::size_t>(it - names_.begin());
}

std::vector<double> ChainSet::chain_values(std::size_t chain, std::size_t param) const {
  std::vector<double> out(saved_);
  for (std::size_t i = 0; i < saved_; ++i) out[i] = at(chain, i, param);
  return out;
}

std::vector<double> ChainSet::pooled(std::size_t param) const {
  std::vector<double> out;
  out.reserve(chains_ * saved_);
  for (std::size_t c = 0; c < chains_; ++c)
    for (std::size_t i = 0; i < saved_; ++i) out.push_back(at(c, i, param));
  return out;
}

namespace {

constexpr std::size_t kMaxNonFiniteStreak = 10000;

struct BlockRuntime {
  const Block* spec = nullptr;
  std::size_t dim = 0;
  double target = 0.234;
  double log_scale = 0.0;
  Eigen::MatrixXd chol;  // proposal shape
  // Running moments of the block during burn-in.
  Eigen::VectorXd mean;
  Eigen::MatrixXd m2;
  std::size_t count = 0;
  bool shape_adapted = false;
  std::size_t accepted = 0;
  std::size_t attempts = 0;
};

struct ChainOutput {
  std::vector<double> draws;  // saved x dim
  std::vector<double> acceptance;
  std::vector<double> scale_trace;
};

ChainOutput run_chain(std::size_t chain, const LogDensity& logpost, const std::vector<double>& init,
                      const std::vector<Block>& blocks, const McmcConfig& cfg) {
  Rng rng = Rng::stream(cfg.seed, chain);
  const std::size_t dim = init.size();
  const std::size_t burnin = cfg.burnin();
  const std::size_t saved = cfg.saved_per_chain();

  std::vector<BlockRuntime> rt(blocks.size());
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    auto& r = rt[b];
    r.spec = &blocks[b];
    r.dim = blocks[b].indices.size();
    r.target = r.dim == 1 ? 0.44 : 0.234;
    r.chol = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(r.dim), static_cast<Eigen::Index>(r.dim));
    for (std::size_t k = 0; k < r.dim; ++k) {
      const auto& s = blocks[b].initial_scales;
      r.chol(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) = k < s.size() ? s[k] : 0.1;
    }
    r.mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(r.dim));
    r.m2 = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(r.dim), static_cast<Eigen::Index>(r.dim));
  }

  ChainOutput out;
  out.draws.reserve(saved * dim);
  out.scale_trace.reserve(cfg.iterations * blocks.size());

  std::vector<double> x = init;
  std::vector<double> proposal(dim);
  double lp = logpost(x);
  bool lp_current = true;
  std::size_t nonfinite_streak = 0;
  std::size_t next_save = 0;
  const std::size_t collect_from = burnin / 10;

  for (std::size_t t = 0; t < cfg.iterations; ++t) {
    const bool adapting = t < burnin;
    for (auto& r : rt) {
      const Block& blk = *r.spec;
      if (blk.exact) {
        blk.exact(std::span<double>(x), rng);
        lp_current = false;
        continue;
      }
      for (std::size_t step_no = 0; step_no < std::max<std::size_t>(1, blk.steps); ++step_no) {
        Eigen::VectorXd z(static_cast<Eigen::Index>(r.dim));
        for (auto& v : z) v = sample_normal(rng);
        const Eigen::VectorXd step = std::exp(r.log_scale) * (r.chol * z);
        proposal = x;
        for (std::size_t k = 0; k < r.dim; ++k) proposal[blk.indices[k]] += step(static_cast<Eigen::Index>(k));

        double current = 0.0;
        double candidate = 0.0;
        if (blk.conditional) {
          current = blk.conditional(x);
          candidate = blk.conditional(proposal);
        } else {
          if (!lp_current) {
            lp = logpost(x);
            lp_current = true;
          }
          current = lp;
          candidate = logpost(proposal);
        }
        bool accept = false;
        if (std::isfinite(candidate)) {
          nonfinite_streak = 0;
          accept = std::log(rng.uniform()) < candidate - current;
        } else if (++nonfinite_streak > kMaxNonFiniteStreak) {
          throw NumericError("sampler: more than 10000 consecutive non-finite log-posterior proposals"
                             " (chain " + std::to_string(chain) + ", iteration " + std::to_string(t + 1) + ")");
        }
        if (accept) {
          x.swap(proposal);
          if (blk.conditional) {
            lp_current = false;
          } else {
            lp = candidate;
          }
        }

        if (adapting) {
          const double gain = std::pow(static_cast<double>(t + 1), -0.6);
          r.log_scale = std::clamp(r.log_scale + gain * ((accept ? 1.0 : 0.0) - r.target), -40.0, 10.0);
          if (t >= collect_from) {
            Eigen::VectorXd v(static_cast<Eigen::Index>(r.dim));
            for (std::size_t k = 0; k < r.dim; ++k) v(static_cast<Eigen::Index>(k)) = x[blk.indices[k]];
            ++r.count;
            const Eigen::VectorXd delta = v - r.mean;
            r.mean += delta / static_cast<double>(r.count);
            r.m2 += delta * (v - r.mean).transpose();
            if (r.count >= 200 && r.count % 100 == 0) {
              const double factor = 2.38 * 2.38 / static_cast<double>(r.dim);
              Eigen::MatrixXd cov = r.m2 / static_cast<double>(r.count - 1);
              const double jitter = 1e-12 * (1.0 + cov.diagonal().cwiseAbs().maxCoeff());
              cov.diagonal().array() += jitter;
              Eigen::LLT<Eigen::MatrixXd> llt(factor * cov);
              if (llt.info() == Eigen::Success && cov.diagonal().minCoeff() > 0.0) {
                r.chol = llt.matrixL();
                if (!r.shape_adapted) r.log_scale = 0.0;
                r.shape_adapted = true;
              }
            }
          }
        } else {
          ++r.attempts;
          if (accept) ++r.accepted;
        }
      }
    }
    for (const auto& r : rt) out.scale_trace.push_back(r.log_scale);

    if (!adapting && next_save < saved && (t - burnin + 1) == (next_save + 1) * cfg.thin) {
      out.draws.insert(out.draws.end(), x.begin(), x.end());
      ++next_save;
    }
  }
  for (const auto& r : rt) {
    if (r.spec->exact || r.attempts == 0) {
      out.acceptance.push_back(1.0);
    } else {
      out.acceptance.push_back(static_cast<double>(r.accepted) / static_cast<double>(r.attempts));
    }
  }
  return out;
}

void check_blocks(const std::vector<Block>& blocks, std::size_t dim) {
  std::vector<int> seen(dim, 0);
  for (const auto& b : blocks) {
    if (b.indices.empty()) throw ConfigError("sampler: empty block");
    for (std::size_t i : b.indices) {
      if (i >= dim) throw ConfigError("sampler: block index out of range");
      ++seen[i];
    }
  }
  for (int s : seen)
    if (s != 1) throw ConfigError("sampler: blocks must partition the parameter indices");
}

}  // namespace

ChainSet sample_gibbs(const LogDensity& logpost, std::vector<double> init, std::vector<Block> blocks,
                      const McmcConfig& cfg, std::vector<std::string> names) {
  cfg.validate();
  const std::size_t dim = init.size();
  check_blocks(blocks, dim);
  if (names.empty()) {
    for (std::size_t i = 0; i < dim; ++i) names.push_back("p" + std::to_string(i));
  }
  if (names.size() != dim) throw ConfigError("sampler: parameter name count mismatch");
  const double lp0 = logpost(init);
  if (!std::isfinite(lp0)) throw NumericError("sampler: log posterior is not finite at the initial value");

  std::vector<ChainOutput> outputs(cfg.chains);
  std::vector<std::exception_ptr> errors(cfg.chains);
  auto work = [&](std::size_t c) {
    try {
      outputs[c] = run_chain(c, logpost, init, blocks, cfg);
    } catch (...) {
      errors[c] = std::current_exception();
    }
  };
  if (cfg.parallel && cfg.chains > 1) {
    std::vector<std::jthread> threads;
    for (std::size_t c = 0; c < cfg.chains; ++c) threads.emplace_back(work, c);
  } else {
    for (std::size_t c = 0; c < cfg.chains; ++c) work(c);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  const std::size_t saved = cfg.saved_per_chain();
  ChainSet set(std::move(names), cfg.chains, saved);
  for (std::size_t c = 0; c < cfg.chains; ++c) {
    for (std::size_t i = 0; i < saved; ++i) {
      for (std::size_t d = 0; d < dim; ++d) {
        const double v = outputs[c].draws[i * dim + d];
        if (!std::isfinite(v)) throw NumericError("sampler: non-finite draw");
        set.at(c, i, d) = v;
      }
    }
    set.acceptance.push_back(std::move(outputs[c].acceptance));
    set.scale_trace.push_back(std::move(outputs[c].scale_trace));
  }
  for (std::size_t i = 0; i < saved; ++i) set.iteration_number.push_back(cfg.burnin() + (i + 1) * cfg.thin);
  set.burnin_fraction = cfg.burnin_fraction;
  set.blocks = blocks.size();
  return set;
}

ChainSet sample(const LogDensity& logpost, std::vector<double> init,
                const std::vector<std::vector<std::size_t>>& blocks, const McmcConfig& cfg,
                std::vector<std::string> names) {
  std::vector<Block> specs;
  for (const auto& b : blocks) specs.push_back(Block{b, {}, {}, {}});
  return sample_gibbs(logpost, std::move(init), std::move(specs), cfg, std::move(names));
}

void write_chains_csv(std::ostream& out, const ChainSet& chains) {
  out << "chain,iteration";
  for (const auto& n : chains.names()) out << ',' << n;
  out << '\n';
  char buf[64];
  for (std::size_t c = 0; c < chains.chains(); ++c) {
    for (std::size_t i = 0; i < chains.saved(); ++i) {
      const std::size_t iter = i < chains.iteration_number.size() ? chains.iteration_number[i] : i + 1;
      out << (c + 1) << ',' << iter;
      for (std::size_t d = 0; d < chains.dim(); ++d) {
        auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), chains.at(c, i, d));
        out << ',' << std::string_view(buf, static_cast<std::size_t>(ptr - buf));
      }
      out << '\n';
    }
  }
}

ChainSet read_chains_csv(std::istream& in) {
  auto split = [](const std::string& line) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) {
      while (!f.empty() && (f.back() == '\r' || f.back() == ' ')) f.pop_back();
      fields.push_back(f);
    }
    return fields;
  };
  std::string line;
  if (!std::getline(in, line)) throw DataError("chain file is empty");
  const auto header = split(line);
  if (header.size() < 3 || header[0] != "chain" || header[1] != "iteration") {
    throw DataError("chain file header must start with chain,iteration and name a parameter");
  }
  const std::vector<std::string> names(header.begin() + 2, header.end());

  std::vector<std::size_t> chain_ids;
  std::vector<std::vector<std::vector<double>>> rows;  // [chain][iter][param]
  std::vector<std::size_t> iterations;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto fields = split(line);
    if (fields.size() != header.size()) {
      throw DataError("chain file line " + std::to_string(lineno) + ": expected " +
                      std::to_string(header.size()) + " fields");
    }
    std::vector<double> values(fields.size());
    for (std::size_t k = 0; k < fields.size(); ++k) {
      const auto& f = fields[k];
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), values[k]);
      if (ec != std::errc{} || ptr != f.data() + f.size() || !std::isfinite(values[k])) {
        throw DataError("chain file line " + std::to_string(lineno) + ": bad value '" + f + "'");
      }
    }
    const auto id = static_cast<std::size_t>(values[0]);
    auto it = std::find(chain_ids.begin(), chain_ids.end(), id);
    if (it == chain_ids.end()) {
      chain_ids.push_back(id);
      rows.emplace_back();
      it = chain_ids.end() - 1;
    }
    auto& chain_rows = rows[static_cast<std::size_t>(it - chain_ids.begin())];
    if (it == chain_ids.begin()) iterations.push_back(static_cast<std::size_t>(values[1]));
    chain_rows.emplace_back(values.begin() + 2, values.end());
  }
  if (rows.empty()) throw DataError("chain file has no draws");
  std::size_t saved = rows.front().size();
  for (const auto& r : rows) saved = std::min(saved, r.size());
  if (saved == 0) throw DataError("chain file has an empty chain");

  ChainSet set(names, rows.size(), saved);
  for (std::size_t c = 0; c < rows.size(); ++c)
    for (std::size_t i = 0; i < saved; ++i)
      for (std::size_t d = 0; d < names.size(); ++d) set.at(c, i, d) = rows[c][i][d];
  iterations.resize(saved);
  set.iteration_number = iterations;
  return set;
}

std::optional<double> split_rhat(const std::vector<std::vector<double>>& chains) {
  if (chains.size() < 2) return std::nullopt;
  std::size_t n = chains.front().size();
  for (const auto& c : chains) n = std::min(n, c.size());
  const std::size_t half = n / 2;
  if (half < 2) return std::nullopt;
  std::vector<double> means;
  std::vector<double> vars;
  for (const auto& c : chains) {
    for (std::size_t part = 0; part < 2; ++part) {
      // For odd n the middle draw is dropped.
      const std::size_t start = part == 0 ? 0 : n - half;
      double m = 0.0;
      for (std::size_t i = 0; i < half; ++i) m += c[start + i];
      m /= static_cast<double>(half);
      double v = 0.0;
      for (std::size_t i = 0; i < half; ++i) v += (c[start + i] - m) * (c[start + i] - m);
      means.push_back(m);
      vars.push_back(v / static_cast<double>(half - 1));
    }
  }
  const auto m = static_cast<double>(means.size());
  const auto nh = static_cast<double>(half);
  const double grand = std::accumulate(means.begin(), means.end(), 0.0) / m;
  double between = 0.0;
  for (double mu : means) between += (mu - grand) * (mu - grand);
  between *= nh / (m - 1.0);
  const double within = std::accumulate(vars.begin(), vars.end(), 0.0) / m;
  if (!(within > 0.0)) return std::nullopt;
  const double var_plus = (nh - 1.0) / nh * within + between / nh;
  return std::sqrt(var_plus / within);
}

double ess_single_chain(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 2) return 0.0;
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  auto autocov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) s += (x[i] - mean) * (x[i + lag] - mean);
    return s / static_cast<double>(n);
  };
  const double c0 = autocov(0);
  if (!(c0 > 0.0)) return 0.0;
  double tau = -1.0;
  double previous_pair = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
    double pair = (autocov(2 * k) + autocov(2 * k + 1)) / c0;
    if (pair < 0.0) break;
    pair = std::min(pair, previous_pair);  // initial monotone sequence
    previous_pair = pair;
    tau += 2.0 * pair;
  }
  const double cap = static_cast<double>(n) * std::log10(static_cast<double>(n));
  return std::min(static_cast<double>(n) / std::max(tau, 1e-12), cap);
}

const ParameterDiagnostics& Diagnostics::operator[](const std::string& name) const {
  for (const auto& p : parameters)
    if (p.name == name) return p;
  throw std::out_of_range("no diagnostics for " + name);
}

Diagnostics diagnose(const ChainSet& chains, const DiagnosticThresholds& thresholds) {
  if (chains.saved() < 2) throw DataError("diagnose: need at least 2 saved draws per chain");
  Diagnostics out;
  const double total = static_cast<double>(chains.chains() * chains.saved());
  for (std::size_t d = 0; d < chains.dim(); ++d) {
    ParameterDiagnostics p;
    p.name = chains.names()[d];
    std::vector<std::vector<double>> per_chain;
    for (std::size_t c = 0; c < chains.chains(); ++c) per_chain.push_back(chains.chain_values(c, d));
    bool constant = false;
    for (const auto& v : per_chain) {
      const double e = ess_single_chain(v);
      if (e == 0.0) constant = true;
      p.ess += e;
    }
    p.ess_ratio = p.ess / total;
    if (constant) {
      p.problem = "zero-variance chain";
    } else if (chains.chains() >= 2) {
      p.rhat = split_rhat(per_chain);
      if (!p.rhat) p.problem = "rhat undefined";
    }
    out.parameters.push_back(std::move(p));
  }

  auto judged = [&](const ParameterDiagnostics& p) {
    return thresholds.monitor.empty() ||
           std::find(thresholds.monitor.begin(), thresholds.monitor.end(), p.name) != thresholds.monitor.end();
  };
  if (chains.chains() < 2) {
    out.failures.push_back("insufficient chains");
  } else if (chains.chains() < thresholds.min_chains) {
    out.failures.push_back("chains < " + std::to_string(thresholds.min_chains));
  }
  if (chains.saved() < thresholds.min_saved_per_chain) {
    out.failures.push_back("saved draws per chain < " + std::to_string(thresholds.min_saved_per_chain));
  }
  if (chains.burnin_fraction && *chains.burnin_fraction + 1e-12 < thresholds.min_burnin_fraction) {
    out.failures.push_back("burn-in fraction below threshold");
  }
  for (const auto& p : out.parameters) {
    if (!judged(p)) continue;
    if (!p.problem.empty()) {
      out.failures.push_back(p.name + ": " + p.problem);
      continue;
    }
    if (chains.chains() >= 2 && p.rhat && !(*p.rhat < thresholds.max_rhat)) {
      std::ostringstream os;
      os << p.name << ": rhat >= " << thresholds.max_rhat;
      out.failures.push_back(os.str());
    }
    if (!(p.ess_ratio >= thresholds.min_ess_ratio)) {
      std::ostringstream os;
      os << p.name << ": ess ratio < " << thresholds.min_ess_ratio;
      out.failures.push_back(os.str());
    }
  }
  out.pass = out.failures.empty();
  if (out.pass) {
    out.verdict = "pass";
  } else if (chains.chains() < 2) {
    out.verdict = "insufficient chains";
  } else {
    std::string joined;
    for (const auto& f : out.failures) joined += (joined.empty() ? "" : "; ") + f;
    out.verdict = "fail: " + joined;
  }
  return out;
}

}  // namespace survbayes
