#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "survbayes/errors.hpp"
#include "survbayes/mcmc.hpp"
#include "survbayes/stats.hpp"
#include "testing.hpp"

using namespace survbayes;
using survbayes::testing::mean_of;
using survbayes::testing::variance_of;

namespace {

double std_normal(std::span<const double> x) { return -0.5 * x[0] * x[0]; }

McmcConfig config(std::size_t iterations, std::size_t thin = 1, std::uint64_t seed = 1) {
  McmcConfig c;
  c.iterations = iterations;
  c.thin = thin;
  c.seed = seed;
  return c;
}

ChainSet ar1_chains(std::size_t chains, std::size_t n, double rho, double shift_per_chain, std::uint64_t seed) {
  ChainSet set({"x"}, chains, n);
  Rng rng(seed);
  for (std::size_t c = 0; c < chains; ++c) {
    double x = sample_normal(rng) / std::sqrt(1 - rho * rho);
    for (std::size_t i = 0; i < n; ++i) {
      x = rho * x + sample_normal(rng);
      set.at(c, i, 0) = x + shift_per_chain * static_cast<double>(c);
    }
  }
  return set;
}

}  // namespace

TEST_CASE("sampler recovers a standard normal") {
  const ChainSet chains = sample(std_normal, {0.0}, {{0}}, config(20000, 1));
  REQUIRE(chains.chains() == 4);
  REQUIRE(chains.saved() == 10000);
  const auto draws = chains.pooled(0);
  CHECK(std::abs(mean_of(draws)) < 0.05);
  CHECK(std::abs(variance_of(draws) - 1.0) < 0.1);
  for (const auto& acc : chains.acceptance) CHECK(std::abs(acc[0] - 0.44) < 0.08);
}

TEST_CASE("a flat target accepts every proposal") {
  const ChainSet chains = sample([](std::span<const double>) { return 0.0; }, {0.0, 0.0}, {{0, 1}}, config(2000));
  for (const auto& acc : chains.acceptance) CHECK(acc[0] == 1.0);
}

TEST_CASE("sampling is deterministic and independent of scheduling") {
  const LogDensity target = [](std::span<const double> x) {
    return -0.5 * (x[0] * x[0] + (x[1] - x[0]) * (x[1] - x[0]) / 0.1);
  };
  McmcConfig cfg = config(3000, 2, 77);
  const ChainSet a = sample(target, {0.5, 0.5}, {{0, 1}}, cfg);
  const ChainSet b = sample(target, {0.5, 0.5}, {{0, 1}}, cfg);
  CHECK(a == b);
  cfg.parallel = false;
  CHECK(sample(target, {0.5, 0.5}, {{0, 1}}, cfg) == a);
  cfg.seed = 78;
  CHECK_FALSE(sample(target, {0.5, 0.5}, {{0, 1}}, cfg) == a);
}

TEST_CASE("chains use separate random streams") {
  const ChainSet chains = sample(std_normal, {0.0}, {{0}}, config(400));
  CHECK(chains.chain_values(0, 0) != chains.chain_values(1, 0));
}

TEST_CASE("proposal scales are frozen after burn-in") {
  const McmcConfig cfg = config(4000, 1, 5);
  const ChainSet chains = sample(std_normal, {3.0}, {{0}}, cfg);
  for (const auto& trace : chains.scale_trace) {
    REQUIRE(trace.size() == cfg.iterations);
    const double frozen = trace[cfg.burnin()];
    for (std::size_t t = cfg.burnin(); t < trace.size(); ++t) CHECK(trace[t] == frozen);
    CHECK(trace[0] != frozen);
  }
}

TEST_CASE("draws match the target distribution function") {
  // Logistic target: F(x) = 1 / (1 + e^-x).
  const LogDensity logistic = [](std::span<const double> x) { return -x[0] - 2.0 * std::log1p(std::exp(-x[0])); };
  McmcConfig cfg = config(100000, 2, 9);
  cfg.chains = 4;
  auto draws = sample(logistic, {0.0}, {{0}}, cfg).pooled(0);
  std::sort(draws.begin(), draws.end());
  double ks = 0.0;
  const double n = static_cast<double>(draws.size());
  for (std::size_t i = 0; i < draws.size(); ++i) {
    const double f = 1.0 / (1.0 + std::exp(-draws[i]));
    ks = std::max({ks, std::abs(f - static_cast<double>(i) / n), std::abs(f - static_cast<double>(i + 1) / n)});
  }
  CHECK(draws.size() == 100000);
  CHECK(ks < 0.02);
}

TEST_CASE("exact Gamma blocks reproduce Gamma moments") {
  // Independent Gamma(3, 2) and Gamma(0.5, 4) coordinates, each drawn exactly.
  std::vector<Block> blocks;
  blocks.push_back(Block{{0}, [](std::span<double> x, Rng& rng) { x[0] = sample_gamma(rng, 3.0, 2.0); }, {}, {}});
  blocks.push_back(Block{{1}, [](std::span<double> x, Rng& rng) { x[1] = sample_gamma(rng, 0.5, 4.0); }, {}, {}});
  const LogDensity logpost = [](std::span<const double> x) {
    return gamma_logpdf(x[0], 3.0, 2.0) + gamma_logpdf(x[1], 0.5, 4.0);
  };
  const ChainSet chains = sample_gibbs(logpost, {1.0, 1.0}, std::move(blocks), config(10000));
  for (const auto& acc : chains.acceptance) {
    CHECK(acc[0] == 1.0);
    CHECK(acc[1] == 1.0);
  }
  const auto a = chains.pooled(0);
  const auto b = chains.pooled(1);
  const double na = static_cast<double>(a.size());
  // Moments within 3 Monte-Carlo standard errors of the exact values.
  CHECK(std::abs(mean_of(a) - 1.5) < 3.0 * std::sqrt(0.75 / na));
  CHECK(std::abs(mean_of(b) - 0.125) < 3.0 * std::sqrt(0.03125 / na));
  CHECK(std::abs(variance_of(a) - 0.75) < 0.05);
  CHECK(std::abs(variance_of(b) - 0.03125) < 0.005);
}

TEST_CASE("mixed exact and Metropolis blocks on a correlated normal") {
  // (x, y) bivariate normal, means (1, -2), unit variances, correlation 0.8.
  const double rho = 0.8;
  const LogDensity logpost = [rho](std::span<const double> p) {
    const double a = p[0] - 1.0, b = p[1] + 2.0;
    return -(a * a - 2 * rho * a * b + b * b) / (2 * (1 - rho * rho));
  };
  std::vector<Block> blocks;
  blocks.push_back(Block{{0}, [rho](std::span<double> x, Rng& rng) {
                           x[0] = 1.0 + rho * (x[1] + 2.0) + std::sqrt(1 - rho * rho) * sample_normal(rng);
                         },
                         {}, {}});
  blocks.push_back(Block{{1}, {}, {}, {0.5}});
  const ChainSet chains = sample_gibbs(logpost, {0.0, 0.0}, std::move(blocks), config(20000, 2, 4));
  CHECK(std::abs(mean_of(chains.pooled(0)) - 1.0) < 0.05);
  CHECK(std::abs(mean_of(chains.pooled(1)) + 2.0) < 0.05);
}

TEST_CASE("sampler rejects bad inputs") {
  CHECK_THROWS_AS(sample([](std::span<const double>) { return kNegInf; }, {0.0}, {{0}}, config(100)), NumericError);
  CHECK_THROWS_AS(sample(std_normal, {0.0, 1.0}, {{0}}, config(100)), ConfigError);
  CHECK_THROWS_AS(sample(std_normal, {0.0, 1.0}, {{0, 1}, {1}}, config(100)), ConfigError);
  McmcConfig bad = config(100);
  bad.burnin_fraction = 1.0;
  CHECK_THROWS_AS(sample(std_normal, {0.0}, {{0}}, bad), ConfigError);
}

TEST_CASE("repeated non-finite proposals abort with a diagnostic") {
  // Finite only at exactly zero, so every proposal is rejected as non-finite.
  const LogDensity spike = [](std::span<const double> x) { return x[0] == 0.0 ? 0.0 : std::nan(""); };
  McmcConfig cfg = config(40000);
  cfg.chains = 1;
  try {
    sample(spike, {0.0}, {{0}}, cfg);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("consecutive") != std::string::npos);
  }
}

TEST_CASE("diagnostics on iid normal chains") {
  const ChainSet iid = ar1_chains(4, 1000, 0.0, 0.0, 10);
  const Diagnostics d = diagnose(iid);
  CHECK(*d.parameters[0].rhat < 1.01);
  CHECK(d.parameters[0].ess_ratio > 0.9);
  CHECK(d.pass);
  CHECK(d.verdict == "pass");
}

TEST_CASE("ESS of an AR(1) chain") {
  const ChainSet ar = ar1_chains(4, 25000, 0.5, 0.0, 11);
  const Diagnostics d = diagnose(ar);
  CHECK(std::abs(d.parameters[0].ess_ratio - 1.0 / 3.0) < 0.1);
  CHECK_FALSE(d.pass);
}

TEST_CASE("separated chains fail on rhat") {
  ChainSet split({"x"}, 2, 2000);
  Rng rng(12);
  for (std::size_t i = 0; i < 2000; ++i) {
    split.at(0, i, 0) = -10.0 + sample_normal(rng);
    split.at(1, i, 0) = 10.0 + sample_normal(rng);
  }
  const Diagnostics d = diagnose(split, DiagnosticThresholds{1.05, 0.5, 1000, 2, 0.5, {}});
  CHECK(*d.parameters[0].rhat > 1.5);
  CHECK_FALSE(d.pass);
  CHECK(d.verdict.find("rhat") != std::string::npos);
}

TEST_CASE("pass flag enforces the chain count and saved-draw quota") {
  const ChainSet three = ar1_chains(3, 1000, 0.0, 0.0, 13);
  CHECK_FALSE(diagnose(three).pass);
  const ChainSet short_run = ar1_chains(4, 999, 0.0, 0.0, 14);
  const Diagnostics d = diagnose(short_run);
  CHECK_FALSE(d.pass);
  CHECK(d.verdict.find("saved draws per chain < 1000") != std::string::npos);
  ChainSet early = ar1_chains(4, 1000, 0.0, 0.0, 15);
  early.burnin_fraction = 0.2;
  CHECK(diagnose(early).verdict.find("burn-in") != std::string::npos);
}

TEST_CASE("single chain has no rhat") {
  const Diagnostics d = diagnose(ar1_chains(1, 2000, 0.0, 0.0, 16));
  CHECK_FALSE(d.parameters[0].rhat.has_value());
  CHECK_FALSE(d.pass);
  CHECK(d.verdict == "insufficient chains");
}

TEST_CASE("zero-variance chain is a named failure") {
  ChainSet flat({"x", "y"}, 4, 1000);
  Rng rng(3);
  for (std::size_t c = 0; c < 4; ++c)
    for (std::size_t i = 0; i < 1000; ++i) {
      flat.at(c, i, 0) = 2.0;
      flat.at(c, i, 1) = sample_normal(rng);
    }
  const Diagnostics d = diagnose(flat);
  CHECK(d.parameters[0].problem == "zero-variance chain");
  CHECK_FALSE(d.parameters[0].rhat.has_value());
  CHECK(d.verdict.find("x: zero-variance chain") != std::string::npos);
  DiagnosticThresholds only_y;
  only_y.monitor = {"y"};
  CHECK(diagnose(flat, only_y).pass);
}

TEST_CASE("split rhat is invariant under a common affine map") {
  survbayes::testing::Gen gen(17);
  for (int trial = 0; trial < 20; ++trial) {
    const ChainSet base = ar1_chains(4, 300, gen.uniform(0, 0.9), gen.uniform(0, 0.5), 100 + static_cast<std::uint64_t>(trial));
    const double a = gen.uniform(0.01, 50.0) * (gen.coin() ? 1.0 : -1.0);
    const double b = gen.uniform(-100, 100);
    ChainSet mapped = base;
    for (std::size_t c = 0; c < 4; ++c)
      for (std::size_t i = 0; i < 300; ++i) mapped.at(c, i, 0) = a * base.at(c, i, 0) + b;
    CHECK(*diagnose(mapped).parameters[0].rhat == doctest::Approx(*diagnose(base).parameters[0].rhat).epsilon(1e-9));
  }
}

TEST_CASE("chain CSV round trip") {
  const ChainSet chains = sample(std_normal, {0.0}, {{0}}, config(200, 2), {"beta"});
  std::ostringstream out;
  write_chains_csv(out, chains);
  std::istringstream in(out.str());
  const ChainSet back = read_chains_csv(in);
  REQUIRE(back.chains() == chains.chains());
  REQUIRE(back.saved() == chains.saved());
  CHECK(back.names() == chains.names());
  for (std::size_t c = 0; c < chains.chains(); ++c) CHECK(back.chain_values(c, 0) == chains.chain_values(c, 0));

  std::istringstream broken("chain,iteration,beta\n1,1,0.5\n1,2\n");
  CHECK_THROWS_AS(read_chains_csv(broken), DataError);
}

TEST_CASE("jumped streams do not repeat the base stream") {
  Rng a = Rng::stream(42, 0);
  Rng b = Rng::stream(42, 1);
  std::vector<std::uint64_t> xa, xb;
  for (int i = 0; i < 1000; ++i) {
    xa.push_back(a());
    xb.push_back(b());
  }
  std::sort(xa.begin(), xa.end());
  for (auto v : xb) CHECK_FALSE(std::binary_search(xa.begin(), xa.end(), v));
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
}
