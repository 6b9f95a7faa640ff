#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace survbayes {

enum class Arm : std::uint8_t { kControl = 0, kTreatment = 1 };

struct SurvivalRecord {
  std::string id;
  double time = 0.0;   // study time, opaque units
  bool event = false;  // false = right-censored
  Arm arm = Arm::kControl;

  double z() const { return arm == Arm::kTreatment ? 1.0 : 0.0; }
  friend bool operator==(const SurvivalRecord&, const SurvivalRecord&) = default;
};

/// A validated, immutable set of right-censored two-arm survival records.
///
/// Construction enforces: at least one record, every time finite and > 0, and at
/// least one observed event. Row order is preserved.
class TrialDataset {
 public:
  explicit TrialDataset(std::vector<SurvivalRecord> records, std::string time_unit = "");

  const std::vector<SurvivalRecord>& records() const { return records_; }
  const std::string& time_unit() const { return time_unit_; }
  std::size_t size() const { return records_.size(); }

  std::size_t count(Arm arm) const;
  std::size_t events() const;
  std::size_t events(Arm arm) const;
  double max_time() const;
  double total_time(Arm arm) const;
  bool has_both_arms() const { return count(Arm::kControl) > 0 && count(Arm::kTreatment) > 0; }

  /// Throws DataError unless both arms are represented.
  void require_two_arms() const;

  /// Multiplies every time by `factor` (> 0). Units are never converted implicitly.
  TrialDataset rescaled(double factor) const;
  /// Same records with treatment/control labels exchanged.
  TrialDataset arms_swapped() const;

  friend bool operator==(const TrialDataset& a, const TrialDataset& b) {
    return a.records_ == b.records_;
  }

 private:
  std::vector<SurvivalRecord> records_;
  std::string time_unit_;
};

/// Header names used for each logical column.
struct ColumnMap {
  std::string id = "id";
  std::string time = "time";
  std::string event = "event";
  std::string arm = "arm";
};

TrialDataset load_csv(const std::filesystem::path& path, const ColumnMap& columns = {});
TrialDataset parse_csv(std::istream& in, const ColumnMap& columns = {});
void write_csv(std::ostream& out, const TrialDataset& data, const ColumnMap& columns = {});
void write_csv(const std::filesystem::path& path, const TrialDataset& data,
               const ColumnMap& columns = {});

struct SimBaseline {
  double rate = 1.0;   // lambda: H0(t) = rate * t^shape
  double shape = 1.0;  // 1 = constant hazard (exponential)
};

struct SimSpec {
  std::size_t n_control = 0;
  std::size_t n_treatment = 0;
  double true_log_hr = 0.0;
  SimBaseline baseline;
  std::optional<double> cutoff;  // administrative censoring time
  double censoring_rate = 0.0;   // independent exponential censoring, 0 = none
  std::uint64_t seed = 0;
};

/// Draws latent event times by inverting S(t|Z) = S0(t)^exp(Z beta), then applies
/// censoring. Records are emitted control arm first; ids are 1-based row numbers.
TrialDataset simulate_trial(const SimSpec& spec);

/// Resamples with replacement within each arm. Every output position keeps the arm
/// of the input record at that position, so per-arm counts are preserved.
TrialDataset bootstrap_stratified(const TrialDataset& data, std::uint64_t seed);

}  // namespace survbayes
