#include "config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "survbayes/errors.hpp"

namespace survbayes::cli {

using nlohmann::json;

const std::vector<std::string>& model_presets() {
  static const std::vector<std::string> presets{
      "conjugate-skeptical", "conjugate-enthusiastic", "cox", "exponential-mle", "weibull-mle",
      "exponential", "weibull", "pem-deciles", "pem-equal-width", "pem-failure-times",
      "tbp-weibull", "tbp-loglogistic", "tbp-lognormal", "spline"};
  return presets;
}

Fields::Fields(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
  if (!obj_.is_object()) throw ConfigError(path_ + ": expected an object");
}

std::string Fields::where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

bool Fields::has(const std::string& key) const { return obj_.contains(key) && !obj_.at(key).is_null(); }

double Fields::number(const std::string& key, double fallback) const {
  if (!has(key)) return fallback;
  const auto& v = obj_.at(key);
  if (!v.is_number()) throw ConfigError(where(key) + ": expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError(where(key) + ": must be finite");
  return d;
}

std::optional<double> Fields::optional_number(const std::string& key) const {
  if (!has(key)) return std::nullopt;
  return number(key, 0.0);
}

double Fields::positive(const std::string& key, double fallback) const {
  const double d = number(key, fallback);
  if (!(d > 0.0)) throw ConfigError(where(key) + ": must be > 0");
  return d;
}

std::size_t Fields::count(const std::string& key, std::size_t fallback) const {
  if (!has(key)) return fallback;
  const auto& v = obj_.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw ConfigError(where(key) + ": expected a non-negative integer");
  }
  return v.get<std::size_t>();
}

std::uint64_t Fields::u64(const std::string& key, std::uint64_t fallback) const {
  if (!has(key)) return fallback;
  const auto& v = obj_.at(key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
    throw ConfigError(where(key) + ": expected an unsigned integer");
  }
  return v.get<std::uint64_t>();
}

bool Fields::boolean(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  if (!obj_.at(key).is_boolean()) throw ConfigError(where(key) + ": expected true or false");
  return obj_.at(key).get<bool>();
}

std::string Fields::text(const std::string& key, const std::string& fallback) const {
  if (!has(key)) return fallback;
  if (!obj_.at(key).is_string()) throw ConfigError(where(key) + ": expected a string");
  return obj_.at(key).get<std::string>();
}

std::vector<double> Fields::numbers(const std::string& key) const {
  std::vector<double> out;
  if (!has(key)) return out;
  const auto& v = obj_.at(key);
  if (!v.is_array()) throw ConfigError(where(key) + ": expected an array of numbers");
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) throw ConfigError(where(key) + "[" + std::to_string(i) + "]: expected a number");
    out.push_back(v[i].get<double>());
  }
  return out;
}

std::vector<std::size_t> Fields::counts(const std::string& key) const {
  std::vector<std::size_t> out;
  if (!has(key)) return out;
  const auto& v = obj_.at(key);
  if (!v.is_array()) throw ConfigError(where(key) + ": expected an array of integers");
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number_integer() || v[i].get<long long>() < 1) {
      throw ConfigError(where(key) + "[" + std::to_string(i) + "]: expected a positive integer");
    }
    out.push_back(v[i].get<std::size_t>());
  }
  return out;
}

void Fields::only(const std::vector<std::string>& allowed) const {
  for (const auto& [key, _] : obj_.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      std::string list;
      for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
      throw ConfigError(where(key) + ": unknown key (allowed: " + list + ")");
    }
  }
}

SimSpec parse_sim_spec(const json& j, const std::string& path) {
  Fields f(j, path);
  f.only({"n_control", "n_treatment", "log_hr", "rate", "shape", "cutoff", "censoring_rate", "seed"});
  SimSpec s;
  s.n_control = f.count("n_control", 231);
  s.n_treatment = f.count("n_treatment", 234);
  s.true_log_hr = f.number("log_hr", 0.0);
  s.baseline.rate = f.positive("rate", 1.0);
  s.baseline.shape = f.positive("shape", 1.0);
  s.cutoff = f.optional_number("cutoff");
  s.censoring_rate = f.number("censoring_rate", 0.0);
  if (s.censoring_rate < 0.0) throw ConfigError(f.where("censoring_rate") + ": must be >= 0");
  s.seed = f.u64("seed", 1);
  return s;
}

namespace {

DataSource parse_data(const json& j, const std::filesystem::path& base_dir) {
  Fields f(j, "data");
  f.only({"csv", "simulate", "columns", "time_unit"});
  DataSource d;
  if (f.has("csv") == f.has("simulate")) throw ConfigError("data: give exactly one of 'csv' or 'simulate'");
  if (f.has("csv")) {
    std::filesystem::path p = f.text("csv", "");
    d.csv = p.is_absolute() || base_dir.empty() ? p : base_dir / p;
  } else {
    d.simulate = parse_sim_spec(j.at("simulate"), "data.simulate");
  }
  if (f.has("columns")) {
    Fields c(j.at("columns"), "data.columns");
    c.only({"id", "time", "event", "arm"});
    d.columns.id = c.text("id", d.columns.id);
    d.columns.time = c.text("time", d.columns.time);
    d.columns.event = c.text("event", d.columns.event);
    d.columns.arm = c.text("arm", d.columns.arm);
  }
  d.time_unit = f.text("time_unit", "");
  return d;
}

McmcConfig parse_mcmc(const json& j) {
  Fields f(j, "mcmc");
  f.only({"chains", "iterations", "burnin_fraction", "thin", "seed", "parallel"});
  McmcConfig m;
  m.chains = f.count("chains", m.chains);
  m.iterations = f.count("iterations", m.iterations);
  m.burnin_fraction = f.number("burnin_fraction", m.burnin_fraction);
  m.thin = f.count("thin", m.thin);
  m.seed = f.u64("seed", m.seed);
  m.parallel = f.boolean("parallel", m.parallel);
  return m;
}

DiagnosticThresholds parse_diagnostics(const json& j) {
  Fields f(j, "diagnostics");
  f.only({"max_rhat", "min_ess_ratio", "min_saved_per_chain", "min_chains", "min_burnin_fraction"});
  DiagnosticThresholds t;
  t.max_rhat = f.positive("max_rhat", t.max_rhat);
  t.min_ess_ratio = f.number("min_ess_ratio", t.min_ess_ratio);
  t.min_saved_per_chain = f.count("min_saved_per_chain", t.min_saved_per_chain);
  t.min_chains = f.count("min_chains", t.min_chains);
  t.min_burnin_fraction = f.number("min_burnin_fraction", t.min_burnin_fraction);
  return t;
}

ModelSpec parse_model(const json& j, std::size_t index) {
  const std::string path = "models[" + std::to_string(index) + "]";
  ModelSpec m;
  m.path = path;
  if (j.is_string()) {
    m.preset = j.get<std::string>();
  } else if (j.is_object()) {
    Fields f(j, path);
    if (!f.has("preset")) throw ConfigError(path + ": missing 'preset'");
    m.preset = f.text("preset", "");
    m.label = f.text("label", "");
    m.options = j;
    m.options.erase("preset");
    m.options.erase("label");
  } else {
    throw ConfigError(path + ": expected a preset name or an object");
  }
  const auto& presets = model_presets();
  if (std::find(presets.begin(), presets.end(), m.preset) == presets.end()) {
    std::string list;
    for (const auto& p : presets) list += (list.empty() ? "" : ", ") + p;
    throw ConfigError(path + ": unknown model '" + m.preset + "' (valid presets: " + list + ")");
  }
  if (m.label.empty()) m.label = m.preset;
  return m;
}

}  // namespace

RunConfig parse_run_config(const json& doc, const std::filesystem::path& base_dir) {
  Fields f(doc, "");
  f.only({"data", "time_scale", "models", "mcmc", "diagnostics", "thresholds", "output"});
  RunConfig cfg;
  if (f.has("data")) cfg.data = parse_data(doc.at("data"), base_dir);
  cfg.time_scale = f.positive("time_scale", 1.0);
  if (!f.has("models") || !doc.at("models").is_array() || doc.at("models").empty()) {
    throw ConfigError("models: expected a non-empty array");
  }
  for (std::size_t i = 0; i < doc.at("models").size(); ++i) cfg.models.push_back(parse_model(doc.at("models")[i], i));
  for (std::size_t i = 0; i < cfg.models.size(); ++i) {
    std::size_t dup = 1;
    for (std::size_t k = 0; k < i; ++k)
      if (cfg.models[k].label == cfg.models[i].label) ++dup;
    if (dup > 1) cfg.models[i].label += "-" + std::to_string(dup);
  }
  if (f.has("mcmc")) cfg.mcmc = parse_mcmc(doc.at("mcmc"));
  if (f.has("diagnostics")) cfg.diagnostics = parse_diagnostics(doc.at("diagnostics"));
  if (f.has("thresholds")) {
    cfg.thresholds = f.numbers("thresholds");
    for (double c : cfg.thresholds)
      if (!(c > 0.0)) throw ConfigError("thresholds: every hazard-ratio cutoff must be > 0");
  }
  if (f.has("output")) {
    cfg.output = f.text("output", "");
  }
  return cfg;
}

RunConfig parse_run_config_text(const std::string& text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return parse_run_config(doc, base_dir);
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_run_config_text(ss.str(), path.parent_path());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace survbayes::cli
