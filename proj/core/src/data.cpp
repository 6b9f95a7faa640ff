#include "survbayes/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "survbayes/errors.hpp"
#include "survbayes/rng.hpp"

namespace survbayes {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      out.push_back(trim(line.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

std::string row_error(std::size_t row, const std::string& what) {
  return "row " + std::to_string(row) + ": " + what;
}

double parse_time(std::string_view field, std::size_t row) {
  double value = 0.0;
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    throw DataError(row_error(row, "unparseable time '" + std::string(field) + "'"));
  }
  if (!std::isfinite(value) || value <= 0.0) {
    throw DataError(row_error(row, "time must be finite and > 0 (got " + std::string(field) + ")"));
  }
  return value;
}

bool parse_flag(std::string_view field, std::size_t row, const char* name) {
  if (field == "1") return true;
  if (field == "0") return false;
  throw DataError(row_error(row, std::string(name) + " must be 0 or 1 (got '" +
                                     std::string(field) + "')"));
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

TrialDataset::TrialDataset(std::vector<SurvivalRecord> records, std::string time_unit)
    : records_(std::move(records)), time_unit_(std::move(time_unit)) {
  if (records_.empty()) throw DataError("dataset is empty");
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const double t = records_[i].time;
    if (!std::isfinite(t) || t <= 0.0) {
      throw DataError(row_error(i + 1, "time must be finite and > 0"));
    }
  }
  if (events() == 0) throw DataError("no events in dataset");
}

std::size_t TrialDataset::count(Arm arm) const {
  return static_cast<std::size_t>(
      std::count_if(records_.begin(), records_.end(), [arm](const auto& r) { return r.arm == arm; }));
}

std::size_t TrialDataset::events() const {
  return static_cast<std::size_t>(
      std::count_if(records_.begin(), records_.end(), [](const auto& r) { return r.event; }));
}

std::size_t TrialDataset::events(Arm arm) const {
  return static_cast<std::size_t>(std::count_if(
      records_.begin(), records_.end(), [arm](const auto& r) { return r.event && r.arm == arm; }));
}

double TrialDataset::max_time() const {
  double m = 0.0;
  for (const auto& r : records_) m = std::max(m, r.time);
  return m;
}

double TrialDataset::total_time(Arm arm) const {
  double s = 0.0;
  for (const auto& r : records_)
    if (r.arm == arm) s += r.time;
  return s;
}

void TrialDataset::require_two_arms() const {
  if (!has_both_arms()) throw DataError("two-arm fit requires at least one record per arm");
}

TrialDataset TrialDataset::rescaled(double factor) const {
  if (!(factor > 0.0) || !std::isfinite(factor)) throw DataError("time scale must be > 0");
  auto copy = records_;
  for (auto& r : copy) r.time *= factor;
  return TrialDataset(std::move(copy), time_unit_);
}

TrialDataset TrialDataset::arms_swapped() const {
  auto copy = records_;
  for (auto& r : copy) r.arm = r.arm == Arm::kTreatment ? Arm::kControl : Arm::kTreatment;
  return TrialDataset(std::move(copy), time_unit_);
}

TrialDataset parse_csv(std::istream& in, const ColumnMap& columns) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty file");
  const auto header = split_fields(line);
  auto locate = [&](const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DataError("missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t id_col = locate(columns.id);
  const std::size_t time_col = locate(columns.time);
  const std::size_t event_col = locate(columns.event);
  const std::size_t arm_col = locate(columns.arm);
  const std::size_t needed = std::max({id_col, time_col, event_col, arm_col}) + 1;

  std::vector<SurvivalRecord> records;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const auto fields = split_fields(line);
    if (fields.size() < needed) {
      throw DataError(row_error(row, "expected at least " + std::to_string(needed) + " fields"));
    }
    SurvivalRecord r;
    r.id = std::string(fields[id_col]);
    r.time = parse_time(fields[time_col], row);
    r.event = parse_flag(fields[event_col], row, "event");
    r.arm = parse_flag(fields[arm_col], row, "arm") ? Arm::kTreatment : Arm::kControl;
    records.push_back(std::move(r));
  }
  if (records.empty()) throw DataError("empty file");
  return TrialDataset(std::move(records));
}

TrialDataset load_csv(const std::filesystem::path& path, const ColumnMap& columns) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return parse_csv(in, columns);
}

void write_csv(std::ostream& out, const TrialDataset& data, const ColumnMap& columns) {
  out << columns.id << ',' << columns.time << ',' << columns.event << ',' << columns.arm << '\n';
  for (const auto& r : data.records()) {
    out << r.id << ',' << format_double(r.time) << ',' << (r.event ? 1 : 0) << ','
        << static_cast<int>(r.arm) << '\n';
  }
}

void write_csv(const std::filesystem::path& path, const TrialDataset& data,
               const ColumnMap& columns) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  write_csv(out, data, columns);
}

TrialDataset simulate_trial(const SimSpec& spec) {
  if (spec.n_control + spec.n_treatment == 0) throw DataError("simulation needs at least one subject");
  if (!(spec.baseline.rate > 0.0) || !(spec.baseline.shape > 0.0)) {
    throw DataError("baseline rate and shape must be > 0");
  }
  if (spec.censoring_rate < 0.0) throw DataError("censoring rate must be >= 0");

  Rng rng(spec.seed);
  std::vector<SurvivalRecord> records;
  records.reserve(spec.n_control + spec.n_treatment);
  const std::size_t n = spec.n_control + spec.n_treatment;
  for (std::size_t i = 0; i < n; ++i) {
    SurvivalRecord r;
    r.id = std::to_string(i + 1);
    r.arm = i < spec.n_control ? Arm::kControl : Arm::kTreatment;
    // S(t|Z) = exp(-rate * t^shape * e^{beta Z}) = U
    const double hr = std::exp(spec.true_log_hr * r.z());
    const double u = rng.uniform();
    const double latent = std::pow(-std::log(u) / (spec.baseline.rate * hr), 1.0 / spec.baseline.shape);
    double censor = std::numeric_limits<double>::infinity();
    if (spec.censoring_rate > 0.0) censor = -std::log(rng.uniform()) / spec.censoring_rate;
    if (spec.cutoff) censor = std::min(censor, *spec.cutoff);
    r.event = latent <= censor;
    r.time = r.event ? latent : censor;
    records.push_back(std::move(r));
  }
  if (spec.cutoff && !(*spec.cutoff > 0.0)) {
    throw DataError("no events in dataset (administrative cutoff must be > 0)");
  }
  return TrialDataset(std::move(records));
}

TrialDataset bootstrap_stratified(const TrialDataset& data, std::uint64_t seed) {
  data.require_two_arms();
  std::vector<std::size_t> pool[2];
  for (std::size_t i = 0; i < data.size(); ++i) {
    pool[static_cast<int>(data.records()[i].arm)].push_back(i);
  }
  Rng rng(seed);
  std::vector<SurvivalRecord> out;
  out.reserve(data.size());
  for (const auto& r : data.records()) {
    const auto& p = pool[static_cast<int>(r.arm)];
    const auto pick = static_cast<std::size_t>(rng.uniform() * static_cast<double>(p.size()));
    out.push_back(data.records()[p[std::min(pick, p.size() - 1)]]);
  }
  return TrialDataset(std::move(out), data.time_unit());
}

}  // namespace survbayes
