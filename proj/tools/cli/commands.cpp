#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "survbayes/conjugate.hpp"
#include "survbayes/errors.hpp"
#include "survbayes/frequentist.hpp"
#include "survbayes/mcmc.hpp"
#include "survbayes/parametric.hpp"
#include "survbayes/pem.hpp"
#include "survbayes/report.hpp"
#include "survbayes/spline.hpp"
#include "survbayes/stats.hpp"
#include "survbayes/tbp.hpp"

namespace survbayes::cli {

using nlohmann::json;

TrialDataset load_data(const DataSource& source, double time_scale) {
  if (!(time_scale > 0.0)) throw ConfigError("time_scale must be > 0");
  TrialDataset data = source.csv ? load_csv(*source.csv, source.columns) : simulate_trial(*source.simulate);
  if (!source.time_unit.empty()) data = TrialDataset(data.records(), source.time_unit);
  return time_scale == 1.0 ? data : data.rescaled(time_scale);
}

namespace {

const TrialDataset& need_data(const TrialDataset* data, const ModelSpec& spec) {
  if (data == nullptr) throw ConfigError(spec.path + ": model '" + spec.preset + "' needs a data source");
  return *data;
}

NormalPrior beta_prior(const Fields& f, NormalPrior fallback) {
  fallback.mean = f.number("beta_mean", fallback.mean);
  fallback.sd = f.positive("beta_sd", fallback.sd);
  return fallback;
}

PosteriorSummary frequentist_row(const MleFit& fit, const std::string& model) {
  PosteriorSummary s;
  s.model = model;
  s.bayesian = false;
  s.mean = s.median = fit.beta();
  s.sd = fit.beta_se();
  const double z = normal_quantile(0.975);
  s.lower = s.mean - z * s.sd;
  s.upper = s.mean + z * s.sd;
  s.verdict = "mle";
  return s;
}

std::string to_text(const std::function<void(std::ostream&)>& writer) {
  std::ostringstream os;
  writer(os);
  return os.str();
}

// Pointwise posterior mean and 95% band of S0 on a grid, from at most 200 draws.
template <typename Survival>
std::string baseline_curve_csv(const ChainSet& chains, double tmax, Survival survival) {
  constexpr std::size_t kGrid = 101;
  const std::size_t total = chains.chains() * chains.saved();
  const std::size_t step = std::max<std::size_t>(1, total / 200);
  std::vector<std::vector<double>> values(kGrid);
  std::vector<double> params(chains.dim());
  for (std::size_t k = 0; k < total; k += step) {
    const std::size_t c = k / chains.saved(), i = k % chains.saved();
    for (std::size_t d = 0; d < chains.dim(); ++d) params[d] = chains.at(c, i, d);
    for (std::size_t g = 0; g < kGrid; ++g) {
      values[g].push_back(survival(params, tmax * static_cast<double>(g) / static_cast<double>(kGrid - 1)));
    }
  }
  std::ostringstream os;
  os << "time,survival,lower,upper\n";
  for (std::size_t g = 0; g < kGrid; ++g) {
    double mean = 0.0;
    for (double v : values[g]) mean += v;
    mean /= static_cast<double>(values[g].size());
    os << format_double(tmax * static_cast<double>(g) / static_cast<double>(kGrid - 1)) << ','
       << format_double(mean) << ',' << format_double(empirical_quantile(values[g], 0.025)) << ','
       << format_double(empirical_quantile(values[g], 0.975)) << '\n';
  }
  return os.str();
}

void attach_fit(ModelOutcome& out, FitResult fit, const DiagnosticThresholds& thresholds) {
  DiagnosticThresholds th = thresholds;
  th.monitor = {"beta"};
  fit.diagnostics = diagnose(fit.chains, th);
  const std::string model = fit.summary.model;
  out.summary = fit.summary;
  out.summary.rhat = fit.diagnostics["beta"].rhat;
  out.summary.ess_ratio = fit.diagnostics["beta"].ess_ratio;
  out.summary.converged = fit.diagnostics.pass;
  out.summary.verdict = fit.diagnostics.verdict;
  out.diagnostics = fit.diagnostics;
  out.artifacts.push_back({".chains.csv", to_text([&](std::ostream& os) { write_chains_csv(os, fit.chains); })});
  out.artifacts.push_back({".diagnostics.txt", to_text([&](std::ostream& os) {
                             write_diagnostics_report(os, fit.diagnostics, fit.chains, th);
                           })});
  out.warnings.insert(out.warnings.end(), fit.warnings.begin(), fit.warnings.end());
}

}  // namespace

ModelOutcome run_model(const ModelSpec& spec, const TrialDataset* data, const McmcConfig& mcmc,
                       const DiagnosticThresholds& thresholds, const std::vector<double>& hr_cutoffs) {
  ModelOutcome out;
  out.label = spec.label;
  const Fields f(spec.options, spec.path);
  const std::string& p = spec.preset;
  const auto started = std::chrono::steady_clock::now();

  if (p == "conjugate-skeptical" || p == "conjugate-enthusiastic") {
    const bool enthusiastic = p == "conjugate-enthusiastic";
    f.only(enthusiastic ? std::vector<std::string>{"estimate", "se", "n0", "design_hr", "level"}
                        : std::vector<std::string>{"estimate", "se", "n0", "level"});
    NormalLikelihoodSummary like;
    if (f.has("estimate") != f.has("se")) throw ConfigError(spec.path + ": give both 'estimate' and 'se' or neither");
    if (f.has("estimate")) {
      like = {f.number("estimate", 0.0), f.positive("se", 1.0)};
    } else {
      const MleFit cox = cox_fit(need_data(data, spec));
      like = {cox.beta(), cox.beta_se()};
    }
    const double n0 = f.positive("n0", 10.0);
    const NormalPrior prior = enthusiastic ? enthusiastic_prior(std::log(f.positive("design_hr", 0.64)), n0)
                                           : skeptical_prior(n0);
    const NormalPosterior post = conjugate_update(prior, like);
    const double level = f.number("level", 0.95);
    const auto [lo, hi] = credible_interval(post, level);
    PosteriorSummary& s = out.summary;
    s.model = p;
    s.mean = s.median = post.mean;
    s.sd = post.sd;
    s.lower = lo;
    s.upper = hi;
    s.level = level;
    for (double c : hr_cutoffs) s.tail.push_back({c, prob_hr_exceeds(post, c)});
    s.verdict = "closed form";
  } else if (p == "cox") {
    f.only({"ties"});
    const std::string ties = f.text("ties", "breslow");
    if (ties != "breslow" && ties != "efron") throw ConfigError(f.where("ties") + ": expected breslow or efron");
    const MleFit fit = cox_fit(need_data(data, spec), ties == "efron" ? TieMethod::kEfron : TieMethod::kBreslow);
    out.summary = frequentist_row(fit, "cox-" + ties);
  } else if (p == "exponential-mle" || p == "weibull-mle") {
    f.only({});
    const auto family = p == "weibull-mle" ? ParametricFamily::kWeibull : ParametricFamily::kExponential;
    const TrialDataset& d = need_data(data, spec);
    d.require_two_arms();
    out.summary = frequentist_row(parametric_mle(d, family), p);
  } else if (p == "exponential" || p == "weibull") {
    f.only({"prior", "beta_mean", "beta_sd"});
    ParametricPriorSpec priors = ParametricPriorSpec::preset(f.text("prior", "rstanarm"));
    priors.beta = beta_prior(f, priors.beta);
    const auto family = p == "weibull" ? ParametricFamily::kWeibull : ParametricFamily::kExponential;
    attach_fit(out, fit_parametric(need_data(data, spec), family, priors, mcmc, hr_cutoffs), thresholds);
  } else if (p.rfind("pem-", 0) == 0) {
    f.only({"intervals", "partition", "prior", "r0", "gamma_shape", "gamma_rate", "beta_mean", "beta_sd",
            "fixed_beta"});
    const TrialDataset& d = need_data(data, spec);
    std::string partition = p == "pem-deciles"       ? "quantile"
                            : p == "pem-equal-width" ? "equal_width"
                                                     : "failure_times";
    partition = f.text("partition", partition);
    PartitionMethod method;
    if (partition == "quantile") method = PartitionMethod::kQuantile;
    else if (partition == "equal_width") method = PartitionMethod::kEqualWidth;
    else if (partition == "failure_times") method = PartitionMethod::kFailureTimes;
    else throw ConfigError(f.where("partition") + ": expected quantile, equal_width or failure_times");
    PemPriorSpec priors;
    const std::string style = f.text("prior", p == "pem-failure-times" ? "diffuse" : "ml_centered");
    if (style == "ml_centered") priors.style = PemPriorSpec::Style::kMlCentered;
    else if (style == "diffuse") priors.style = PemPriorSpec::Style::kDiffuse;
    else throw ConfigError(f.where("prior") + ": expected ml_centered or diffuse");
    priors.r0 = f.positive("r0", priors.r0);
    priors.diffuse_shape = f.positive("gamma_shape", priors.diffuse_shape);
    priors.diffuse_rate = f.positive("gamma_rate", priors.diffuse_rate);
    priors.beta = beta_prior(f, priors.beta);
    priors.fixed_beta = f.optional_number("fixed_beta");
    const TimePartition part = build_partition(d, method, f.count("intervals", 10));
    FitResult fit = fit_pem(d, part, priors, mcmc, hr_cutoffs);
    const ExposureTable table = exposure_matrix(d, part);
    out.artifacts.push_back(
        {".rates.csv", to_text([&](std::ostream& os) { write_rates_csv(os, part, table, fit.chains); })});
    attach_fit(out, std::move(fit), thresholds);
  } else if (p.rfind("tbp-", 0) == 0) {
    f.only({"L", "a0", "b0", "fixed_alpha", "beta_mean", "beta_sd"});
    const TrialDataset& d = need_data(data, spec);
    d.require_two_arms();
    const std::size_t L = f.count("L", 15);
    if (L < 1) throw ConfigError(f.where("L") + ": must be >= 1");
    TbpSpec tbp = tbp_spec_from_mle(d, parse_centering(p.substr(4)), L);
    tbp.a0 = f.positive("a0", tbp.a0);
    tbp.b0 = f.positive("b0", tbp.b0);
    if (f.has("fixed_alpha")) tbp.fixed_alpha = f.positive("fixed_alpha", 1.0);
    tbp.beta = beta_prior(f, tbp.beta);
    FitResult fit = fit_tbp(d, tbp, mcmc, hr_cutoffs);
    out.artifacts.push_back({".baseline.csv", baseline_curve_csv(fit.chains, d.max_time(), [&](const auto& x, double t) {
                               return tbp_survival(tbp_state_from_params(x, tbp.L), tbp, t);
                             })});
    attach_fit(out, std::move(fit), thresholds);
  } else if (p == "spline") {
    f.only({"K", "knots", "select_K", "coef_sd", "sigma_lower", "sigma_upper", "beta_mean", "beta_sd"});
    const TrialDataset& d = need_data(data, spec);
    std::size_t K = f.count("K", 20);
    const auto grid = f.counts("select_K");
    if (!grid.empty()) {
      const auto points = spline_grid_search(d, grid, mcmc);
      std::ostringstream os;
      os << "K,deviance,criterion,beta_mean\n";
      const SplineGridPoint* best = &points.front();
      for (const auto& g : points) {
        os << g.K << ',' << format_double(g.deviance) << ',' << format_double(g.criterion) << ','
           << format_double(g.beta_mean) << '\n';
        if (g.criterion < best->criterion) best = &g;
      }
      out.artifacts.push_back({".grid.csv", os.str()});
      K = best->K;
    }
    SplineHazardSpec s = SplineHazardSpec::equally_spaced(d, K);
    if (f.has("knots")) {
      s.knots = f.numbers("knots");
      s.K = s.knots.size() + 1;
    }
    s.coef_sd = f.positive("coef_sd", s.coef_sd);
    s.sigma_lower = f.positive("sigma_lower", s.sigma_lower);
    s.sigma_upper = f.positive("sigma_upper", s.sigma_upper);
    s.beta = beta_prior(f, s.beta);
    FitResult fit = fit_spline_hazard(d, s, mcmc, hr_cutoffs);
    out.artifacts.push_back({".baseline.csv", baseline_curve_csv(fit.chains, d.max_time(), [&](const auto& x, double t) {
                               const std::span<const double> all(x);
                               return std::exp(-spline_cumulative_hazard(s, all.subspan(1, s.K + 1), t));
                             })});
    attach_fit(out, std::move(fit), thresholds);
  } else {
    throw ConfigError(spec.path + ": unknown model '" + p + "'");
  }
  out.summary.label = spec.label;
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  out.summary.seconds = out.seconds;
  return out;
}

FitReport run_fit(const RunConfig& cfg, std::ostream& log) {
  std::optional<TrialDataset> data;
  if (cfg.data) data = load_data(*cfg.data, cfg.time_scale);
  FitReport report;
  for (std::size_t i = 0; i < cfg.models.size(); ++i) {
    McmcConfig mcmc = cfg.mcmc;
    mcmc.seed = derive_seed(cfg.mcmc.seed, i);
    log << "fitting " << cfg.models[i].label << "...\n";
    ModelOutcome o = run_model(cfg.models[i], data ? &*data : nullptr, mcmc, cfg.diagnostics, cfg.thresholds);
    for (const auto& w : o.warnings) log << "  warning: " << w << '\n';
    if (!o.summary.converged) {
      report.all_converged = false;
      log << "  not converged: " << o.summary.verdict << '\n';
    }
    report.outcomes.push_back(std::move(o));
  }

  std::vector<PosteriorSummary> rows;
  for (const auto& o : report.outcomes) rows.push_back(o.summary);
  const auto& dir = cfg.output;
  for (const auto& o : report.outcomes) {
    for (const auto& a : o.artifacts) {
      atomic_write(dir / (o.label + a.suffix), [&](std::ostream& os) { os << a.content; });
    }
  }
  if (data) {
    const auto curves = kaplan_meier(*data, true);
    for (const auto& c : curves) {
      const std::string name = c.arm == Arm::kTreatment ? "km_treatment.csv" : "km_control.csv";
      atomic_write(dir / name, [&](std::ostream& os) { write_curve_csv(os, c); });
    }
  }
  atomic_write(dir / "summary.json", [&](std::ostream& os) { write_summary_json(os, rows); });
  atomic_write(dir / "summary.txt", [&](std::ostream& os) { write_summary_table(os, rows); });
  atomic_write(dir / "timing.json", [&](std::ostream& os) {
    json t = json::object();
    for (const auto& o : report.outcomes) t[o.label] = o.seconds;
    os << t.dump(2) << '\n';
  });
  return report;
}

namespace {

int cmd_fit(const std::string& config_path, const std::optional<std::uint64_t>& seed,
            const std::optional<std::size_t>& chains, const std::optional<std::size_t>& iter,
            const std::optional<double>& burnin, const std::optional<std::size_t>& thin,
            const std::optional<double>& time_scale, const std::optional<std::string>& output, bool serial,
            bool allow_nonconverged, std::ostream& out, std::ostream& err) {
  RunConfig cfg = load_run_config(config_path);
  if (seed) cfg.mcmc.seed = *seed;
  if (chains) cfg.mcmc.chains = *chains;
  if (iter) cfg.mcmc.iterations = *iter;
  if (burnin) cfg.mcmc.burnin_fraction = *burnin;
  if (thin) cfg.mcmc.thin = *thin;
  if (time_scale) cfg.time_scale = *time_scale;
  if (output) cfg.output = *output;
  if (serial) cfg.mcmc.parallel = false;
  cfg.mcmc.validate();
  const FitReport report = run_fit(cfg, err);
  std::vector<PosteriorSummary> rows;
  for (const auto& o : report.outcomes) rows.push_back(o.summary);
  write_summary_table(out, rows);
  out << "results written to " << cfg.output.string() << '\n';
  return report.all_converged || allow_nonconverged ? kOk : kNotConverged;
}

int cmd_forest(const std::vector<std::string>& inputs, const std::string& output, std::ostream& out) {
  std::vector<PosteriorSummary> rows;
  for (const auto& path : inputs) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    for (auto& r : read_summary_json(in)) rows.push_back(std::move(r));
  }
  if (rows.empty()) throw DataError("forest: no summaries found");
  const auto frows = forest_rows(rows);
  const std::filesystem::path dir = output;
  atomic_write(dir / "forest.csv", [&](std::ostream& os) { write_forest_csv(os, frows); });
  atomic_write(dir / "forest.svg", [&](std::ostream& os) { write_forest_svg(os, frows); });
  out << "forest plot with " << frows.size() << " rows written to " << dir.string() << '\n';
  return kOk;
}

int cmd_diagnose(const std::string& chains_path, const std::string& output, const DiagnosticThresholds& th,
                 const std::optional<double>& burnin_fraction, bool allow_nonconverged, std::ostream& out) {
  std::ifstream in(chains_path);
  if (!in) throw DataError("cannot open " + chains_path);
  ChainSet chains = read_chains_csv(in);
  chains.burnin_fraction = burnin_fraction;
  const Diagnostics diag = diagnose(chains, th);
  const std::filesystem::path dir = output;
  const std::string report = to_text([&](std::ostream& os) { write_diagnostics_report(os, diag, chains, th); });
  atomic_write(dir / "diagnostics.txt", [&](std::ostream& os) { os << report; });
  atomic_write(dir / "diagnostics.json", [&](std::ostream& os) {
    json params = json::array();
    for (const auto& p : diag.parameters) {
      params.push_back({{"name", p.name},
                        {"rhat", p.rhat ? json(round_significant(*p.rhat)) : json(nullptr)},
                        {"ess", round_significant(p.ess)},
                        {"ess_ratio", round_significant(p.ess_ratio)},
                        {"problem", p.problem}});
    }
    os << json{{"verdict", diag.verdict}, {"pass", diag.pass}, {"failures", diag.failures}, {"parameters", params}}
              .dump(2)
       << '\n';
  });
  for (std::size_t d = 0; d < chains.dim(); ++d) {
    const auto& name = chains.names()[d];
    atomic_write(dir / ("trace_" + name + ".csv"), [&](std::ostream& os) { write_trace_csv(os, chains, d); });
    atomic_write(dir / ("density_" + name + ".csv"), [&](std::ostream& os) { write_density_csv(os, chains, d); });
  }
  out << report;
  return diag.pass || allow_nonconverged ? kOk : kNotConverged;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bayesian proportional-hazards analysis of two-arm survival trials", "survbayes"};
  app.require_subcommand(1);

  auto* fit = app.add_subcommand("fit", "fit the models listed in a JSON run configuration");
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> chains, iter, thin;
  std::optional<double> burnin, time_scale;
  std::optional<std::string> fit_output;
  bool serial = false, allow_nonconverged = false;
  fit->add_option("config", config_path, "run configuration (JSON)")->required()->check(CLI::ExistingFile);
  fit->add_option("--seed", seed, "top-level seed");
  fit->add_option("--chains", chains, "chains per model");
  fit->add_option("--iter", iter, "iterations per chain, burn-in included");
  fit->add_option("--burnin", burnin, "burn-in fraction of the iterations");
  fit->add_option("--thin", thin, "thinning interval");
  fit->add_option("--time-scale", time_scale, "multiply every time by this factor");
  fit->add_option("-o,--output", fit_output, "output directory");
  fit->add_flag("--serial", serial, "run chains on one thread");
  fit->add_flag("--allow-nonconverged", allow_nonconverged, "exit 0 even if a fit fails its diagnostics");

  auto* forest = app.add_subcommand("forest", "forest plot (CSV + SVG) from summary.json files");
  std::vector<std::string> forest_inputs;
  std::string forest_output = ".";
  forest->add_option("summaries", forest_inputs, "summary.json files")->required()->check(CLI::ExistingFile);
  forest->add_option("-o,--output", forest_output, "output directory");

  auto* diag = app.add_subcommand("diagnose", "convergence diagnostics for a chain CSV");
  std::string chains_path, diag_output = ".";
  DiagnosticThresholds th;
  std::optional<double> diag_burnin;
  bool diag_allow = false;
  diag->add_option("chains", chains_path, "chain file written by fit")->required()->check(CLI::ExistingFile);
  diag->add_option("-o,--output", diag_output, "output directory");
  diag->add_option("--max-rhat", th.max_rhat, "largest acceptable split-Rhat");
  diag->add_option("--min-ess-ratio", th.min_ess_ratio, "smallest acceptable ESS / draws");
  diag->add_option("--min-saved", th.min_saved_per_chain, "minimum saved draws per chain");
  diag->add_option("--min-chains", th.min_chains, "minimum number of chains");
  diag->add_option("--burnin-fraction", diag_burnin, "burn-in fraction used for the run, if known");
  diag->add_option("--monitor", th.monitor, "parameters judged for the verdict (default: all)");
  diag->add_flag("--allow-nonconverged", diag_allow, "exit 0 even if the verdict is not pass");

  auto* sim = app.add_subcommand("simulate", "simulate a two-arm trial to CSV");
  SimSpec spec;
  spec.n_control = 231;
  spec.n_treatment = 234;
  spec.seed = 1;
  std::optional<double> cutoff;
  std::string sim_output;
  sim->add_option("--n-control", spec.n_control, "control-arm size")->capture_default_str();
  sim->add_option("--n-treatment", spec.n_treatment, "treatment-arm size")->capture_default_str();
  sim->add_option("--log-hr", spec.true_log_hr, "true log hazard ratio");
  sim->add_option("--rate", spec.baseline.rate, "baseline rate lambda, H0(t) = lambda t^shape")->check(CLI::PositiveNumber);
  sim->add_option("--shape", spec.baseline.shape, "baseline Weibull shape")->check(CLI::PositiveNumber);
  sim->add_option("--cutoff", cutoff, "administrative censoring time");
  sim->add_option("--censoring-rate", spec.censoring_rate, "independent exponential censoring rate")
      ->check(CLI::NonNegativeNumber);
  sim->add_option("--seed", spec.seed, "random seed")->capture_default_str();
  sim->add_option("-o,--output", sim_output, "output CSV")->required();

  auto* boot = app.add_subcommand("bootstrap", "arm-stratified bootstrap resamples of a CSV dataset");
  std::string boot_input, boot_output;
  std::uint64_t boot_seed = 1;
  std::size_t replicates = 1;
  boot->add_option("data", boot_input, "input CSV")->required()->check(CLI::ExistingFile);
  boot->add_option("--seed", boot_seed, "random seed")->capture_default_str();
  boot->add_option("--replicates", replicates, "number of resamples")->check(CLI::PositiveNumber);
  boot->add_option("-o,--output", boot_output, "output CSV (one replicate) or directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*fit) {
      return cmd_fit(config_path, seed, chains, iter, burnin, thin, time_scale, fit_output, serial,
                     allow_nonconverged, out, err);
    }
    if (*forest) return cmd_forest(forest_inputs, forest_output, out);
    if (*diag) return cmd_diagnose(chains_path, diag_output, th, diag_burnin, diag_allow, out);
    if (*sim) {
      spec.cutoff = cutoff;
      const TrialDataset data = simulate_trial(spec);
      atomic_write(sim_output, [&](std::ostream& os) { write_csv(os, data); });
      out << data.size() << " records, " << data.events() << " events written to " << sim_output << '\n';
      return kOk;
    }
    if (*boot) {
      const TrialDataset data = load_csv(boot_input);
      for (std::size_t r = 0; r < replicates; ++r) {
        const TrialDataset sample = bootstrap_stratified(data, replicates == 1 ? boot_seed : derive_seed(boot_seed, r));
        std::filesystem::path path = boot_output;
        if (replicates > 1) {
          char name[32];
          std::snprintf(name, sizeof name, "boot_%04zu.csv", r + 1);
          path /= name;
        }
        atomic_write(path, [&](std::ostream& os) { write_csv(os, sample); });
      }
      out << replicates << " bootstrap resample(s) written to " << boot_output << '\n';
      return kOk;
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const ConvergenceError& e) {
    err << "convergence failure: " << e.what() << '\n';
    return kNotConverged;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kData;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kFailure;
}

}  // namespace survbayes::cli
