#include "survbayes/frequentist.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>

#include "survbayes/errors.hpp"

namespace survbayes {

std::size_t MleFit::index_of(const std::string& name) const {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw std::out_of_range("no parameter named " + name);
  return static_cast<std::size_t>(it - names.begin());
}

namespace {

// Subjects grouped by distinct observed time, sorted ascending. Each group holds
// the per-arm event counts at that time; risk sets are accumulated from the end.
struct TimeGroup {
  double time = 0.0;
  std::size_t events[2] = {0, 0};
  std::size_t leaving[2] = {0, 0};  // everyone with this observed time
};

std::vector<TimeGroup> group_by_time(const std::vector<SurvivalRecord>& records) {
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return records[a].time < records[b].time; });
  std::vector<TimeGroup> groups;
  for (std::size_t idx : order) {
    const auto& r = records[idx];
    if (groups.empty() || groups.back().time != r.time) groups.push_back(TimeGroup{r.time});
    const int a = static_cast<int>(r.arm);
    groups.back().leaving[a] += 1;
    if (r.event) groups.back().events[a] += 1;
  }
  return groups;
}

// Event times with their risk-set composition.
struct RiskPoint {
  double time;
  double d[2];       // events by arm
  double at_risk[2];  // subjects with time >= this time, by arm
};

std::vector<RiskPoint> risk_points(const TrialDataset& data) {
  const auto groups = group_by_time(data.records());
  std::vector<RiskPoint> out;
  double at_risk[2] = {static_cast<double>(data.count(Arm::kControl)),
                       static_cast<double>(data.count(Arm::kTreatment))};
  for (const auto& g : groups) {
    if (g.events[0] + g.events[1] > 0) {
      out.push_back(RiskPoint{g.time,
                              {static_cast<double>(g.events[0]), static_cast<double>(g.events[1])},
                              {at_risk[0], at_risk[1]}});
    }
    at_risk[0] -= static_cast<double>(g.leaving[0]);
    at_risk[1] -= static_cast<double>(g.leaving[1]);
  }
  return out;
}

std::string format_trace(const std::vector<double>& trace) {
  std::ostringstream os;
  os << "log-likelihood trace:";
  for (std::size_t i = 0; i < trace.size(); ++i) os << (i ? ", " : " ") << trace[i];
  return os.str();
}

// Inverse of the negated Hessian; falls back to a pseudo-inverse when singular.
Eigen::MatrixXd covariance_from_hessian(const Eigen::MatrixXd& hess) {
  const Eigen::MatrixXd info = -hess;
  Eigen::LLT<Eigen::MatrixXd> llt(info);
  if (llt.info() == Eigen::Success) {
    return llt.solve(Eigen::MatrixXd::Identity(info.rows(), info.cols()));
  }
  return info.completeOrthogonalDecomposition().pseudoInverse();
}

// One damped Newton step toward the maximum; gradient ascent when the Hessian is
// not negative definite.
Eigen::VectorXd ascent_direction(const Eigen::VectorXd& grad, const Eigen::MatrixXd& hess) {
  Eigen::LLT<Eigen::MatrixXd> llt(-hess);
  if (llt.info() == Eigen::Success) return llt.solve(grad);
  const double scale = std::max(1.0, grad.cwiseAbs().maxCoeff());
  return grad / scale;
}

}  // namespace

double StepSurvivalCurve::at(double t) const {
  double s = 1.0;
  for (std::size_t i = 0; i < times.size() && times[i] <= t; ++i) s = survival[i];
  return s;
}

std::vector<StepSurvivalCurve> kaplan_meier(const TrialDataset& data, bool by_arm) {
  auto build = [](const std::vector<SurvivalRecord>& records, std::optional<Arm> arm) {
    StepSurvivalCurve curve;
    curve.arm = arm;
    const auto groups = group_by_time(records);
    std::size_t at_risk = records.size();
    double s = 1.0;
    double greenwood = 0.0;
    for (const auto& g : groups) {
      const std::size_t d = g.events[0] + g.events[1];
      if (d > 0) {
        const auto n = static_cast<double>(at_risk);
        const auto dd = static_cast<double>(d);
        s *= 1.0 - dd / n;
        if (at_risk > d) greenwood += dd / (n * (n - dd));
        curve.times.push_back(g.time);
        curve.survival.push_back(s);
        curve.at_risk.push_back(at_risk);
        curve.events.push_back(d);
        curve.variance.push_back(s > 0.0 ? s * s * greenwood : 0.0);
      }
      at_risk -= g.leaving[0] + g.leaving[1];
    }
    return curve;
  };

  if (!by_arm) return {build(data.records(), std::nullopt)};
  std::vector<StepSurvivalCurve> out;
  for (Arm arm : {Arm::kControl, Arm::kTreatment}) {
    std::vector<SurvivalRecord> subset;
    for (const auto& r : data.records())
      if (r.arm == arm) subset.push_back(r);
    if (subset.empty()) throw DataError("kaplan_meier: arm has no records");
    out.push_back(build(subset, arm));
  }
  return out;
}

void write_curve_csv(std::ostream& out, const StepSurvivalCurve& curve) {
  out << "time,survival,at_risk,events,variance\n";
  for (std::size_t i = 0; i < curve.times.size(); ++i) {
    out << curve.times[i] << ',' << curve.survival[i] << ',' << curve.at_risk[i] << ','
        << curve.events[i] << ',' << curve.variance[i] << '\n';
  }
}

PartialLikelihood cox_partial_likelihood(const TrialDataset& data, double beta, TieMethod ties) {
  const double eb = std::exp(beta);
  PartialLikelihood pl;
  for (const auto& p : risk_points(data)) {
    const double d = p.d[0] + p.d[1];
    const double s0 = p.at_risk[0] + p.at_risk[1] * eb;
    const double s1 = p.at_risk[1] * eb;
    pl.value += p.d[1] * beta;
    pl.score += p.d[1];
    if (ties == TieMethod::kBreslow || d == 1.0) {
      const double ratio = s1 / s0;
      pl.value -= d * std::log(s0);
      pl.score -= d * ratio;
      pl.information += d * (ratio - ratio * ratio);
    } else {
      const double tied0 = p.d[0] + p.d[1] * eb;
      const double tied1 = p.d[1] * eb;
      for (int l = 0; l < static_cast<int>(d); ++l) {
        const double frac = l / d;
        const double a0 = s0 - frac * tied0;
        const double a1 = s1 - frac * tied1;
        const double ratio = a1 / a0;
        pl.value -= std::log(a0);
        pl.score -= ratio;
        pl.information += ratio - ratio * ratio;
      }
    }
  }
  return pl;
}

MleFit cox_fit(const TrialDataset& data, TieMethod ties) {
  if (!data.has_both_arms()) throw DataError("cox_fit: degenerate covariate (all subjects in one arm)");
  bool bounded_above = false;  // some control event with treated subjects at risk
  bool bounded_below = false;  // some treated event with controls at risk
  for (const auto& p : risk_points(data)) {
    if (p.d[0] > 0 && p.at_risk[1] > 0) bounded_above = true;
    if (p.d[1] > 0 && p.at_risk[0] > 0) bounded_below = true;
  }
  if (!bounded_above || !bounded_below) {
    throw NumericError("cox_fit: non-finite MLE (monotone partial likelihood)");
  }

  double beta = 0.0;
  auto pl = cox_partial_likelihood(data, beta, ties);
  MleFit fit;
  fit.names = {"beta"};
  for (int iter = 1; iter <= 100; ++iter) {
    fit.iterations = iter;
    double step = pl.score / pl.information;
    double next = beta + step;
    auto trial = cox_partial_likelihood(data, next, ties);
    // Near the optimum the value is flat to rounding, so a smaller score also counts as progress.
    for (int h = 0; h < 60 && !(trial.value >= pl.value || std::abs(trial.score) < std::abs(pl.score)); ++h) {
      step *= 0.5;
      next = beta + step;
      trial = cox_partial_likelihood(data, next, ties);
    }
    beta = next;
    pl = trial;
    if (std::abs(pl.score) < 1e-8 || std::abs(step) < 1e-10) {
      fit.converged = true;
      break;
    }
  }
  if (!fit.converged) throw ConvergenceError("cox_fit: Newton-Raphson did not converge");
  if (!(pl.information > 0.0)) throw NumericError("cox_fit: non-positive observed information");
  fit.estimate = Eigen::VectorXd::Constant(1, beta);
  fit.covariance = Eigen::MatrixXd::Constant(1, 1, 1.0 / pl.information);
  fit.standard_errors = fit.covariance.diagonal().cwiseSqrt();
  fit.log_likelihood = pl.value;
  return fit;
}

double logrank_z(const TrialDataset& data) {
  data.require_two_arms();
  double o_minus_e = 0.0;
  double var = 0.0;
  for (const auto& p : risk_points(data)) {
    const double n = p.at_risk[0] + p.at_risk[1];
    const double d = p.d[0] + p.d[1];
    o_minus_e += p.d[1] - d * p.at_risk[1] / n;
    if (n > 1.0) var += d * (p.at_risk[0] * p.at_risk[1] / (n * n)) * (n - d) / (n - 1.0);
  }
  return var > 0.0 ? o_minus_e / std::sqrt(var) : 0.0;
}

double parametric_loglik(const TrialDataset& data, ParametricFamily family,
                         const Eigen::VectorXd& params, Eigen::VectorXd* grad,
                         Eigen::MatrixXd* hess) {
  const bool weibull = family == ParametricFamily::kWeibull;
  const Eigen::Index dim = weibull ? 3 : 2;
  if (params.size() != dim) throw std::invalid_argument("parametric_loglik: wrong parameter count");
  const double beta = params(0);
  const double log_rate = params(1);
  const double log_shape = weibull ? params(2) : 0.0;
  const double shape = std::exp(log_shape);

  double ll = 0.0;
  Eigen::VectorXd g = Eigen::VectorXd::Zero(dim);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
  const bool derivs = grad || hess;
  for (const auto& r : data.records()) {
    const double z = r.z();
    const double delta = r.event ? 1.0 : 0.0;
    const double log_t = std::log(r.time);
    const double a_log_t = shape * log_t;
    const double cum = std::exp(log_rate + a_log_t + beta * z);  // H0(t) e^{beta z}
    ll += delta * (log_shape + log_rate + (shape - 1.0) * log_t + beta * z) - cum;
    if (!derivs) continue;
    g(0) += delta * z - cum * z;
    g(1) += delta - cum;
    h(0, 0) -= cum * z * z;
    h(0, 1) -= cum * z;
    h(1, 1) -= cum;
    if (weibull) {
      g(2) += delta * (1.0 + a_log_t) - cum * a_log_t;
      h(0, 2) -= cum * z * a_log_t;
      h(1, 2) -= cum * a_log_t;
      h(2, 2) += delta * a_log_t - cum * (a_log_t * a_log_t + a_log_t);
    }
  }
  if (grad) *grad = g;
  if (hess) {
    h = h.selfadjointView<Eigen::Upper>();
    *hess = h;
  }
  return ll;
}

MleFit parametric_mle(const TrialDataset& data, ParametricFamily family, const MleOptions& opts) {
  const bool weibull = family == ParametricFamily::kWeibull;
  const bool two_arm = data.has_both_arms();
  const double crude_rate = static_cast<double>(data.events()) /
                            (data.total_time(Arm::kControl) + data.total_time(Arm::kTreatment));

  Eigen::VectorXd full(weibull ? 3 : 2);
  full.setZero();
  full(1) = std::log(crude_rate);

  // The free coordinates: beta is pinned at 0 on single-arm data.
  const Eigen::Index offset = two_arm ? 0 : 1;
  const Eigen::Index dim = full.size() - offset;
  auto evaluate = [&](const Eigen::VectorXd& x, Eigen::VectorXd* g, Eigen::MatrixXd* h) {
    Eigen::VectorXd p = full;
    p.tail(dim) = x;
    Eigen::VectorXd gf;
    Eigen::MatrixXd hf;
    const double v = parametric_loglik(data, family, p, g ? &gf : nullptr, h ? &hf : nullptr);
    if (g) *g = gf.tail(dim);
    if (h) *h = hf.bottomRightCorner(dim, dim);
    return v;
  };

  Eigen::VectorXd x = full.tail(dim);
  Eigen::VectorXd g;
  Eigen::MatrixXd h;
  double ll = evaluate(x, &g, &h);
  std::vector<double> trace{ll};
  MleFit fit;
  for (int iter = 1; iter <= opts.max_iterations; ++iter) {
    fit.iterations = iter;
    Eigen::VectorXd step = ascent_direction(g, h);
    Eigen::VectorXd next = x + step;
    double next_ll = evaluate(next, nullptr, nullptr);
    for (int k = 0; k < 60 && !(next_ll >= ll); ++k) {
      step *= 0.5;
      next = x + step;
      next_ll = evaluate(next, nullptr, nullptr);
    }
    x = next;
    ll = evaluate(x, &g, &h);
    trace.push_back(ll);
    if (g.cwiseAbs().maxCoeff() < opts.gradient_tolerance ||
        step.cwiseAbs().maxCoeff() < opts.step_tolerance) {
      fit.converged = true;
      break;
    }
  }
  if (!fit.converged) {
    throw ConvergenceError("parametric_mle: no convergence after " +
                           std::to_string(opts.max_iterations) + " iterations; " +
                           format_trace(trace));
  }
  std::vector<std::string> names = {"beta", "log_rate", "log_shape"};
  names.resize(static_cast<std::size_t>(full.size()));
  fit.names.assign(names.begin() + offset, names.end());
  fit.estimate = x;
  fit.covariance = covariance_from_hessian(h);
  fit.standard_errors = fit.covariance.diagonal().cwiseSqrt();
  fit.log_likelihood = ll;
  return fit;
}

MleFit maximize_numeric(const std::function<double(const Eigen::VectorXd&)>& loglik,
                        Eigen::VectorXd start, std::vector<std::string> names,
                        const MleOptions& opts) {
  const Eigen::Index dim = start.size();
  auto derivatives = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g, Eigen::MatrixXd& h) {
    g.resize(dim);
    h.resize(dim, dim);
    const double f0 = loglik(x);
    Eigen::VectorXd step(dim);
    for (Eigen::Index i = 0; i < dim; ++i) step(i) = 1e-4 * (1.0 + std::abs(x(i)));
    for (Eigen::Index i = 0; i < dim; ++i) {
      Eigen::VectorXd xp = x, xm = x;
      xp(i) += step(i);
      xm(i) -= step(i);
      const double fp = loglik(xp), fm = loglik(xm);
      g(i) = (fp - fm) / (2.0 * step(i));
      h(i, i) = (fp - 2.0 * f0 + fm) / (step(i) * step(i));
      for (Eigen::Index j = 0; j < i; ++j) {
        Eigen::VectorXd pp = x, pm = x, mp = x, mm = x;
        pp(i) += step(i), pp(j) += step(j);
        pm(i) += step(i), pm(j) -= step(j);
        mp(i) -= step(i), mp(j) += step(j);
        mm(i) -= step(i), mm(j) -= step(j);
        h(i, j) = h(j, i) =
            (loglik(pp) - loglik(pm) - loglik(mp) + loglik(mm)) / (4.0 * step(i) * step(j));
      }
    }
    return f0;
  };

  Eigen::VectorXd x = std::move(start);
  Eigen::VectorXd g;
  Eigen::MatrixXd h;
  double ll = derivatives(x, g, h);
  if (!std::isfinite(ll)) throw NumericError("maximize_numeric: non-finite objective at start");
  std::vector<double> trace{ll};
  MleFit fit;
  for (int iter = 1; iter <= opts.max_iterations; ++iter) {
    fit.iterations = iter;
    Eigen::VectorXd step = ascent_direction(g, h);
    Eigen::VectorXd next = x + step;
    double next_ll = loglik(next);
    for (int k = 0; k < 60 && !(next_ll >= ll); ++k) {
      step *= 0.5;
      next = x + step;
      next_ll = loglik(next);
    }
    if (!(next_ll >= ll)) {
      // No ascent along this direction: treat as stationary.
      fit.converged = g.cwiseAbs().maxCoeff() < 1e-3;
      break;
    }
    x = next;
    ll = derivatives(x, g, h);
    trace.push_back(ll);
    if (g.cwiseAbs().maxCoeff() < opts.gradient_tolerance ||
        step.cwiseAbs().maxCoeff() < opts.step_tolerance) {
      fit.converged = true;
      break;
    }
  }
  if (!fit.converged) {
    throw ConvergenceError("maximize_numeric: no convergence; " + format_trace(trace));
  }
  fit.names = std::move(names);
  fit.estimate = x;
  fit.covariance = covariance_from_hessian(h);
  fit.standard_errors = fit.covariance.diagonal().cwiseSqrt();
  fit.log_likelihood = ll;
  return fit;
}

}  // namespace survbayes
