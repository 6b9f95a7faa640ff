#include <doctest.h>

#include <cmath>
#include <sstream>

#include "survbayes/errors.hpp"
#include "survbayes/frequentist.hpp"
#include "testing.hpp"

using namespace survbayes;
using survbayes::testing::make_data;

namespace {

// Events interleaved between the arms, one tied event time (t = 4) and censoring.
TrialDataset interleaved() {
  return make_data({{1, 1, 1}, {3, 1, 1}, {5, 0, 1}, {6, 1, 1}, {2, 1, 0}, {4, 1, 0}, {4, 1, 1}, {7, 0, 0}, {8, 1, 0}});
}

SimSpec big_exponential(std::uint64_t seed) {
  SimSpec s;
  s.n_control = 5000;
  s.n_treatment = 5000;
  s.true_log_hr = 0.3;
  s.baseline.rate = 0.2;
  s.censoring_rate = 0.1;
  s.seed = seed;
  return s;
}

}  // namespace

TEST_CASE("Kaplan-Meier without censoring") {
  const auto km = kaplan_meier(make_data({{1, 1, 0}, {2, 1, 0}, {3, 1, 1}, {4, 1, 1}}), false);
  REQUIRE(km.size() == 1);
  const std::vector<double> expected{0.75, 0.5, 0.25, 0.0};
  REQUIRE(km[0].survival.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(km[0].survival[i] == doctest::Approx(expected[i]).epsilon(1e-14));
}

TEST_CASE("Kaplan-Meier with a censored subject between events") {
  const auto km = kaplan_meier(make_data({{1, 1, 0}, {1.5, 0, 1}, {2, 1, 0}}), false);
  REQUIRE(km[0].times == std::vector<double>{1, 2});
  CHECK(km[0].survival[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(km[0].survival[1] == 0.0);
  CHECK(km[0].at_risk == std::vector<std::size_t>{3, 1});
  CHECK(km[0].at(0.5) == 1.0);
  CHECK(km[0].at(1.7) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("Kaplan-Meier curve invariants on random data") {
  survbayes::testing::Gen gen(12);
  for (int trial = 0; trial < 30; ++trial) {
    const TrialDataset d = gen.dataset(5 + gen.index(60));
    for (const auto& c : kaplan_meier(d, true)) {
      double prev = 1.0;
      for (std::size_t i = 0; i < c.times.size(); ++i) {
        CHECK(c.survival[i] <= prev);
        CHECK(c.survival[i] >= 0.0);
        CHECK(c.events[i] > 0);
        CHECK(c.variance[i] >= 0.0);
        if (i > 0) CHECK(c.times[i] > c.times[i - 1]);
        prev = c.survival[i];
      }
    }
  }
}

TEST_CASE("Kaplan-Meier by arm needs both arms") {
  CHECK_THROWS_AS(kaplan_meier(make_data({{1, 1, 0}, {2, 1, 0}}), true), DataError);
}

TEST_CASE("Kaplan-Meier tracks the exponential fit on constant-hazard data") {
  SimSpec s = big_exponential(4);
  s.true_log_hr = 0.0;
  const TrialDataset d = simulate_trial(s);
  const MleFit fit = parametric_mle(d, ParametricFamily::kExponential);
  const double rate = std::exp(fit.value("log_rate"));
  const auto km = kaplan_meier(d, false)[0];
  double worst = 0.0;
  for (std::size_t i = 0; i < km.times.size(); ++i) {
    if (km.survival[i] < 0.05) break;
    worst = std::max(worst, std::abs(km.survival[i] - std::exp(-rate * km.times[i])));
  }
  CHECK(worst < 4.0 / std::sqrt(static_cast<double>(d.size())));
}

TEST_CASE("Cox fit matches a brute-force grid maximisation") {
  // Oracle: grid over [-5, 5] with step 1e-4 of the Breslow partial likelihood,
  // evaluated independently; the grid maximiser is 0.7378.
  const MleFit breslow = cox_fit(interleaved(), TieMethod::kBreslow);
  CHECK(breslow.converged);
  CHECK(std::abs(breslow.beta() - 0.7378) <= 1e-4);
  // Score root at 40 digits (mpmath). The tie at t = 4 has one event per arm with
  // three subjects per arm at risk, so the Efron correction leaves the maximiser unchanged.
  CHECK(breslow.beta() == doctest::Approx(0.73775782419649188).epsilon(1e-8));
  CHECK(cox_fit(interleaved(), TieMethod::kEfron).beta() == doctest::Approx(0.73775782419649188).epsilon(1e-8));
}

TEST_CASE("Efron and Breslow differ on an unbalanced tie") {
  // Two treated events and one control event tied at t = 4; 40-digit score roots.
  const TrialDataset d = make_data({{1, 1, 1}, {3, 1, 1}, {5, 0, 1}, {6, 1, 1}, {2, 1, 0}, {4, 1, 0},
                                    {4, 1, 1}, {4, 1, 1}, {7, 0, 0}, {8, 1, 0}, {9, 0, 0}});
  CHECK(cox_fit(d, TieMethod::kBreslow).beta() == doctest::Approx(1.0452716787745462).epsilon(1e-8));
  CHECK(cox_fit(d, TieMethod::kEfron).beta() == doctest::Approx(1.0915380802465778).epsilon(1e-8));
}

TEST_CASE("Cox fit rejects a monotone likelihood") {
  // All treatment events precede all control events, so the partial likelihood
  // increases without bound in beta.
  const TrialDataset d = make_data({{1, 1, 1}, {2, 1, 1}, {3, 1, 1}, {4, 1, 0}, {5, 1, 0}, {6, 1, 0}});
  CHECK_THROWS_AS(cox_fit(d), NumericError);
  try {
    cox_fit(d);
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("non-finite MLE") != std::string::npos);
  }
}

TEST_CASE("Cox fit rejects a degenerate covariate") {
  CHECK_THROWS_AS(cox_fit(make_data({{1, 1, 1}, {2, 1, 1}, {3, 0, 1}})), DataError);
}

TEST_CASE("Cox fit negates under arm relabelling") {
  const TrialDataset d = simulate_trial(survbayes::testing::reference_spec(3));
  const MleFit a = cox_fit(d);
  const MleFit b = cox_fit(d.arms_swapped());
  CHECK(b.beta() == doctest::Approx(-a.beta()).epsilon(1e-10));
  CHECK(b.beta_se() == doctest::Approx(a.beta_se()).epsilon(1e-8));
}

TEST_CASE("Cox score vanishes and information is positive at the estimate") {
  survbayes::testing::Gen gen(5);
  for (int trial = 0; trial < 20; ++trial) {
    const TrialDataset d = simulate_trial(survbayes::testing::reference_spec(100 + static_cast<std::uint64_t>(trial)));
    for (TieMethod ties : {TieMethod::kBreslow, TieMethod::kEfron}) {
      const MleFit fit = cox_fit(d, ties);
      const PartialLikelihood pl = cox_partial_likelihood(d, fit.beta(), ties);
      CHECK(std::abs(pl.score) < 1e-6);
      CHECK(pl.information > 0.0);
      CHECK(fit.covariance(0, 0) == doctest::Approx(fit.beta_se() * fit.beta_se()).epsilon(1e-12));
    }
  }
}

TEST_CASE("Breslow and Efron coincide without tied event times") {
  const TrialDataset d = simulate_trial(survbayes::testing::reference_spec(21));
  CHECK(std::abs(cox_fit(d, TieMethod::kBreslow).beta() - cox_fit(d, TieMethod::kEfron).beta()) < 1e-10);
}

TEST_CASE("Cox partial likelihood derivatives match finite differences") {
  const TrialDataset d = interleaved();
  for (double b : {-1.0, 0.0, 0.4, 1.3}) {
    for (TieMethod ties : {TieMethod::kBreslow, TieMethod::kEfron}) {
      const double h = 1e-5;
      const auto pl = cox_partial_likelihood(d, b, ties);
      const double up = cox_partial_likelihood(d, b + h, ties).value;
      const double down = cox_partial_likelihood(d, b - h, ties).value;
      CHECK(pl.score == doctest::Approx((up - down) / (2 * h)).epsilon(1e-6));
      const double su = cox_partial_likelihood(d, b + h, ties).score;
      const double sd = cox_partial_likelihood(d, b - h, ties).score;
      CHECK(pl.information == doctest::Approx(-(su - sd) / (2 * h)).epsilon(1e-6));
    }
  }
}

TEST_CASE("single-arm exponential MLE is events over exposure") {
  const TrialDataset d = make_data({{2, 1, 0}, {3, 0, 0}, {5, 1, 0}, {1, 1, 0}});
  const MleFit fit = parametric_mle(d, ParametricFamily::kExponential);
  CHECK(std::exp(fit.value("log_rate")) == doctest::Approx(3.0 / 11.0).epsilon(1e-12));
  CHECK_THROWS(fit.index_of("beta"));
}

TEST_CASE("two-arm exponential MLE has the closed form") {
  const TrialDataset d = simulate_trial(survbayes::testing::reference_spec(6));
  const double d0 = static_cast<double>(d.events(Arm::kControl));
  const double d1 = static_cast<double>(d.events(Arm::kTreatment));
  const double e0 = d.total_time(Arm::kControl);
  const double e1 = d.total_time(Arm::kTreatment);
  const MleFit fit = parametric_mle(d, ParametricFamily::kExponential);
  CHECK(fit.beta() == doctest::Approx(std::log((d1 / e1) / (d0 / e0))).epsilon(1e-10));
  CHECK(fit.beta_se() == doctest::Approx(std::sqrt(1.0 / d0 + 1.0 / d1)).epsilon(1e-8));
}

TEST_CASE("Weibull MLE nests the exponential when the shape is one") {
  const TrialDataset d = simulate_trial(big_exponential(8));
  const MleFit w = parametric_mle(d, ParametricFamily::kWeibull);
  const MleFit e = parametric_mle(d, ParametricFamily::kExponential);
  const double joint = std::sqrt(w.beta_se() * w.beta_se() + e.beta_se() * e.beta_se());
  CHECK(std::abs(w.beta() - e.beta()) < 2.0 * joint);
  CHECK(std::abs(w.value("log_shape")) < 3.0 * w.se("log_shape"));
}

TEST_CASE("exponential beta is invariant to rescaling time") {
  const TrialDataset d = simulate_trial(survbayes::testing::reference_spec(10));
  const double b = parametric_mle(d, ParametricFamily::kExponential).beta();
  for (double factor : {1.0 / 12.0, 7.0, 365.25}) {
    CHECK(std::abs(parametric_mle(d.rescaled(factor), ParametricFamily::kExponential).beta() - b) < 1e-8);
  }
}

TEST_CASE("parametric log-likelihood derivatives match finite differences") {
  const TrialDataset d = simulate_trial(survbayes::testing::reference_spec(12));
  survbayes::testing::Gen gen(3);
  for (int trial = 0; trial < 20; ++trial) {
    for (auto family : {ParametricFamily::kExponential, ParametricFamily::kWeibull}) {
      const int dim = family == ParametricFamily::kWeibull ? 3 : 2;
      Eigen::VectorXd x(dim);
      x(0) = gen.uniform(-1, 1);
      x(1) = gen.uniform(-5, -2);
      if (dim == 3) x(2) = gen.uniform(-0.5, 0.5);
      Eigen::VectorXd g(dim);
      Eigen::MatrixXd hess(dim, dim);
      parametric_loglik(d, family, x, &g, &hess);
      for (int k = 0; k < dim; ++k) {
        const double h = 1e-6;
        Eigen::VectorXd up = x, down = x;
        up(k) += h;
        down(k) -= h;
        const double fd = (parametric_loglik(d, family, up) - parametric_loglik(d, family, down)) / (2 * h);
        CHECK(survbayes::testing::relative_error(g(k), fd) < 1e-5);
        Eigen::VectorXd gu(dim), gd(dim);
        parametric_loglik(d, family, up, &gu);
        parametric_loglik(d, family, down, &gd);
        for (int j = 0; j < dim; ++j) {
          CHECK(survbayes::testing::relative_error(hess(j, k), (gu(j) - gd(j)) / (2 * h)) < 1e-5);
        }
      }
    }
  }
}

TEST_CASE("parametric MLE reports non-convergence with a trace") {
  const TrialDataset d = simulate_trial(survbayes::testing::reference_spec(14));
  MleOptions opts;
  opts.max_iterations = 1;
  opts.gradient_tolerance = 1e-300;
  opts.step_tolerance = 0.0;
  try {
    parametric_mle(d, ParametricFamily::kWeibull, opts);
    FAIL("expected a ConvergenceError");
  } catch (const ConvergenceError& e) {
    CHECK(std::string(e.what()).find("iteration") != std::string::npos);
  }
}

TEST_CASE("log-rank statistic is antisymmetric in the arms") {
  const TrialDataset d = simulate_trial(survbayes::testing::reference_spec(15));
  CHECK(logrank_z(d.arms_swapped()) == doctest::Approx(-logrank_z(d)).epsilon(1e-12));
}
