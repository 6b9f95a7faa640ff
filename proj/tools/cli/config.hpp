#pragma once

// Run configuration for `survbayes fit`: a JSON document with the layout
//
//   {
//     "data":   {"csv": "trial.csv", "columns": {...}, "time_unit": "months"}
//               or {"simulate": {"n_control": 231, "n_treatment": 234, "log_hr": 0.3661,
//                                "rate": 0.025, "shape": 1, "cutoff": 24, "seed": 1}},
//     "time_scale": 1,
//     "models": ["cox", {"preset": "pem-deciles", "intervals": 10}, ...],
//     "mcmc": {"chains": 4, "iterations": 10000, "burnin_fraction": 0.5, "thin": 5, "seed": 1},
//     "diagnostics": {"max_rhat": 1.05, "min_ess_ratio": 0.5, ...},
//     "thresholds": [1.5],
//     "output": "results"            (relative to the working directory)
//   }
//
// Unknown keys are rejected so that misspelt options never pass silently.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "survbayes/data.hpp"
#include "survbayes/mcmc.hpp"

namespace survbayes::cli {

struct ModelSpec {
  std::string preset;
  std::string label;
  nlohmann::json options = nlohmann::json::object();  // preset-specific keys
  std::string path;                                   // location in the config, for messages
};

struct DataSource {
  std::optional<std::filesystem::path> csv;
  std::optional<SimSpec> simulate;
  ColumnMap columns;
  std::string time_unit;
};

struct RunConfig {
  std::optional<DataSource> data;
  double time_scale = 1.0;
  std::vector<ModelSpec> models;
  McmcConfig mcmc;
  DiagnosticThresholds diagnostics;
  std::vector<double> thresholds{1.5};
  std::filesystem::path output = "survbayes-out";
};

/// Every preset accepted in "models".
const std::vector<std::string>& model_presets();

/// Relative paths in the document are resolved against `base_dir`.
RunConfig parse_run_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);
RunConfig parse_run_config_text(const std::string& text, const std::filesystem::path& base_dir = {});

SimSpec parse_sim_spec(const nlohmann::json& j, const std::string& path);

/// Typed access to one JSON object with path-qualified ConfigError messages.
class Fields {
 public:
  Fields(const nlohmann::json& obj, std::string path);
  bool has(const std::string& key) const;
  double number(const std::string& key, double fallback) const;
  std::optional<double> optional_number(const std::string& key) const;
  double positive(const std::string& key, double fallback) const;
  std::size_t count(const std::string& key, std::size_t fallback) const;
  std::uint64_t u64(const std::string& key, std::uint64_t fallback) const;
  bool boolean(const std::string& key, bool fallback) const;
  std::string text(const std::string& key, const std::string& fallback) const;
  std::vector<double> numbers(const std::string& key) const;
  std::vector<std::size_t> counts(const std::string& key) const;
  /// Throws for any key outside `allowed`.
  void only(const std::vector<std::string>& allowed) const;
  std::string where(const std::string& key) const;

 private:
  const nlohmann::json& obj_;
  std::string path_;
};

}  // namespace survbayes::cli
