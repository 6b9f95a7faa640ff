#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "survbayes/data.hpp"
#include "survbayes/posterior.hpp"

namespace survbayes::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kConfig = 2, kNotConverged = 3, kData = 4 };

struct Artifact {
  std::string suffix;  // appended to the model label, e.g. ".chains.csv"
  std::string content;
};

struct ModelOutcome {
  std::string label;
  PosteriorSummary summary;
  std::optional<Diagnostics> diagnostics;
  std::vector<std::string> warnings;
  std::vector<Artifact> artifacts;
  double seconds = 0.0;
};

TrialDataset load_data(const DataSource& source, double time_scale);

/// Fits one configured model. `data` may be null only for conjugate presets given
/// an explicit estimate and standard error.
ModelOutcome run_model(const ModelSpec& spec, const TrialDataset* data, const McmcConfig& mcmc,
                       const DiagnosticThresholds& thresholds, const std::vector<double>& hr_cutoffs);

struct FitReport {
  std::vector<ModelOutcome> outcomes;
  bool all_converged = true;
};

/// Runs every model (model i seeds its sampler with derive_seed(seed, i)) and writes
/// summary.json, summary.txt, timing.json and per-model artifacts to cfg.output.
FitReport run_fit(const RunConfig& cfg, std::ostream& log);

/// Entry point shared by the executable and the tests. Returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace survbayes::cli
