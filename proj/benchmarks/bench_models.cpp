#include <benchmark/benchmark.h>

#include "survbayes/data.hpp"
#include "survbayes/frequentist.hpp"
#include "survbayes/mcmc.hpp"
#include "survbayes/parametric.hpp"
#include "survbayes/pem.hpp"
#include "survbayes/spline.hpp"
#include "survbayes/tbp.hpp"

using namespace survbayes;

namespace {

const TrialDataset& trial() {
  static const TrialDataset d = [] {
    SimSpec s;
    s.n_control = 231;
    s.n_treatment = 234;
    s.true_log_hr = 0.3661;
    s.baseline.rate = 0.025;
    s.cutoff = 24.0;
    s.seed = 7;
    return simulate_trial(s);
  }();
  return d;
}

McmcConfig short_run() {
  McmcConfig c;
  c.iterations = 2000;
  c.thin = 1;
  c.parallel = false;
  return c;
}

void BM_CoxFit(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(cox_fit(trial(), TieMethod::kEfron).beta());
}
BENCHMARK(BM_CoxFit);

void BM_WeibullLogPosterior(benchmark::State& state) {
  const auto priors = ParametricPriorSpec::preset("diffuse");
  const std::vector<double> x{0.4, -3.7, 0.05};
  for (auto _ : state) benchmark::DoNotOptimize(log_posterior_parametric(trial(), ParametricFamily::kWeibull, priors, x));
}
BENCHMARK(BM_WeibullLogPosterior);

void BM_PemLogLik(benchmark::State& state) {
  const TimePartition p = build_partition(trial(), PartitionMethod::kQuantile, 10);
  const ExposureTable t = exposure_matrix(trial(), p);
  const std::vector<double> rates(p.intervals(), 0.03);
  for (auto _ : state) benchmark::DoNotOptimize(pem_loglik(t, trial(), 0.4, rates));
}
BENCHMARK(BM_PemLogLik);

void BM_TbpLogPosterior(benchmark::State& state) {
  const TbpSpec spec = tbp_spec_from_mle(trial(), CenteringFamily::kWeibull, static_cast<std::size_t>(state.range(0)));
  std::vector<double> x{0.4, spec.theta0(0), spec.theta0(1), 0.0};
  x.resize(3 + spec.L, 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(tbp_log_posterior_unconstrained(trial(), spec, x));
}
BENCHMARK(BM_TbpLogPosterior)->Arg(5)->Arg(15)->Arg(50);

void BM_SplineLogPosterior(benchmark::State& state) {
  const SplineHazardSpec spec = SplineHazardSpec::equally_spaced(trial(), static_cast<std::size_t>(state.range(0)));
  std::vector<double> x(spec.K + 3, 0.01);
  x[1] = -3.7;
  for (auto _ : state) benchmark::DoNotOptimize(spline_log_posterior(trial(), spec, x));
}
BENCHMARK(BM_SplineLogPosterior)->Arg(5)->Arg(20);

void BM_SamplerNormal(benchmark::State& state) {
  const LogDensity target = [](std::span<const double> x) { return -0.5 * (x[0] * x[0] + x[1] * x[1]); };
  McmcConfig cfg = short_run();
  for (auto _ : state) benchmark::DoNotOptimize(sample(target, {0.0, 0.0}, {{0, 1}}, cfg).saved());
}
BENCHMARK(BM_SamplerNormal)->Unit(benchmark::kMillisecond);

void BM_FitExponential(benchmark::State& state) {
  const auto priors = ParametricPriorSpec::preset("diffuse");
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit_parametric(trial(), ParametricFamily::kExponential, priors, short_run()).summary.mean);
  }
}
BENCHMARK(BM_FitExponential)->Unit(benchmark::kMillisecond);

void BM_FitPemDeciles(benchmark::State& state) {
  const TimePartition p = build_partition(trial(), PartitionMethod::kQuantile, 10);
  for (auto _ : state) benchmark::DoNotOptimize(fit_pem(trial(), p, {}, short_run()).summary.mean);
}
BENCHMARK(BM_FitPemDeciles)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
