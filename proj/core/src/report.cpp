#include "survbayes/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "survbayes/errors.hpp"

namespace survbayes {

using nlohmann::json;

double round_significant(double v, int digits) {
  if (!std::isfinite(v) || v == 0.0) return v;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*e", digits - 1, v);
  return std::strtod(buf, nullptr);
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

PosteriorSummary rounded(const PosteriorSummary& s) {
  PosteriorSummary r = s;
  for (double* v : {&r.mean, &r.sd, &r.median, &r.lower, &r.upper}) *v = round_significant(*v);
  for (auto& t : r.tail) t.probability = round_significant(t.probability);
  if (r.rhat) r.rhat = round_significant(*r.rhat);
  if (r.ess_ratio) r.ess_ratio = round_significant(*r.ess_ratio);
  return r;
}

namespace {

json optional_number(const std::optional<double>& v) {
  if (v && std::isfinite(*v)) return *v;
  return nullptr;
}

std::string tail_header(double c) { return "Pr(HR>" + format_double(c) + ")"; }

}  // namespace

void write_summary_json(std::ostream& out, const std::vector<PosteriorSummary>& rows) {
  json models = json::array();
  for (const auto& raw : rows) {
    const PosteriorSummary s = rounded(raw);
    json tail = json::array();
    for (const auto& t : s.tail) tail.push_back({{"threshold_hr", t.threshold_hr}, {"probability", t.probability}});
    models.push_back({{"label", s.label},
                      {"model", s.model},
                      {"bayesian", s.bayesian},
                      {"mean", s.mean},
                      {"sd", s.sd},
                      {"median", s.median},
                      {"lower", s.lower},
                      {"upper", s.upper},
                      {"level", s.level},
                      {"tail", tail},
                      {"rhat", optional_number(s.rhat)},
                      {"ess_ratio", optional_number(s.ess_ratio)},
                      {"converged", s.converged},
                      {"verdict", s.verdict}});
  }
  out << json{{"parameter", "log_hr"}, {"models", models}}.dump(2) << '\n';
}

std::vector<PosteriorSummary> read_summary_json(std::istream& in) {
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("summary file: ") + e.what());
  }
  std::vector<PosteriorSummary> rows;
  try {
    for (const auto& m : doc.at("models")) {
      PosteriorSummary s;
      s.label = m.at("label").get<std::string>();
      s.model = m.value("model", s.label);
      s.bayesian = m.value("bayesian", true);
      s.mean = m.at("mean").get<double>();
      s.sd = m.value("sd", 0.0);
      s.median = m.value("median", s.mean);
      s.lower = m.at("lower").get<double>();
      s.upper = m.at("upper").get<double>();
      s.level = m.value("level", 0.95);
      if (m.contains("tail")) {
        for (const auto& t : m["tail"]) {
          s.tail.push_back({t.at("threshold_hr").get<double>(), t.at("probability").get<double>()});
        }
      }
      if (m.contains("rhat") && m["rhat"].is_number()) s.rhat = m["rhat"].get<double>();
      if (m.contains("ess_ratio") && m["ess_ratio"].is_number()) s.ess_ratio = m["ess_ratio"].get<double>();
      s.converged = m.value("converged", true);
      s.verdict = m.value("verdict", std::string());
      rows.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("summary file: ") + e.what());
  }
  return rows;
}

void write_summary_table(std::ostream& out, const std::vector<PosteriorSummary>& raw_rows) {
  std::vector<PosteriorSummary> rows;
  for (const auto& r : raw_rows) rows.push_back(rounded(r));
  std::vector<double> thresholds;
  for (const auto& r : rows)
    for (const auto& t : r.tail)
      if (std::find(thresholds.begin(), thresholds.end(), t.threshold_hr) == thresholds.end())
        thresholds.push_back(t.threshold_hr);

  std::vector<std::vector<std::string>> cells;
  std::vector<std::string> header{"label", "mean", "sd", "median", "lower", "upper"};
  for (double c : thresholds) header.push_back(tail_header(c));
  header.insert(header.end(), {"rhat", "ess_ratio", "verdict"});
  cells.push_back(header);
  for (const auto& r : rows) {
    std::vector<std::string> line{r.label,
                                  format_double(r.mean),
                                  format_double(r.sd),
                                  format_double(r.median),
                                  format_double(r.lower),
                                  format_double(r.upper)};
    for (double c : thresholds) {
      auto it = std::find_if(r.tail.begin(), r.tail.end(), [c](const auto& t) { return t.threshold_hr == c; });
      line.push_back(it == r.tail.end() ? "-" : format_double(it->probability));
    }
    line.push_back(r.rhat ? format_double(*r.rhat) : "-");
    line.push_back(r.ess_ratio ? format_double(*r.ess_ratio) : "-");
    line.push_back(r.verdict.empty() ? "-" : r.verdict);
    cells.push_back(std::move(line));
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& line : cells)
    for (std::size_t j = 0; j < line.size(); ++j) width[j] = std::max(width[j], line[j].size());
  for (const auto& line : cells) {
    for (std::size_t j = 0; j < line.size(); ++j) {
      const bool last = j + 1 == line.size();
      if (j == 0 || last) {
        out << std::left << std::setw(last ? 0 : static_cast<int>(width[j])) << line[j];
      } else {
        out << std::right << std::setw(static_cast<int>(width[j])) << line[j];
      }
      if (!last) out << "  ";
    }
    out << '\n';
  }
}

std::vector<ForestRow> forest_rows(const std::vector<PosteriorSummary>& rows) {
  std::vector<ForestRow> out;
  for (const auto& r : rows) out.push_back({r.label, r.mean, r.lower, r.upper});
  return out;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else if (c != '\r') {
      fields.back() += c;
    }
  }
  return fields;
}

double parse_number(const std::string& s, std::size_t line) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw DataError("forest csv line " + std::to_string(line) + ": bad number '" + s + "'");
  }
  return v;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

void write_forest_csv(std::ostream& out, const std::vector<ForestRow>& rows) {
  out << "label,mean,lower,upper\n";
  for (const auto& r : rows) {
    out << csv_field(r.label) << ',' << format_double(r.mean) << ',' << format_double(r.lower) << ','
        << format_double(r.upper) << '\n';
  }
}

std::vector<ForestRow> read_forest_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("forest csv: empty file");
  std::vector<ForestRow> rows;
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 4) throw DataError("forest csv line " + std::to_string(n) + ": expected 4 fields");
    rows.push_back({f[0], parse_number(f[1], n), parse_number(f[2], n), parse_number(f[3], n)});
  }
  return rows;
}

double ForestGeometry::to_x(double v) const {
  return plot_left + (v - x_min) / (x_max - x_min) * (plot_right - plot_left);
}

ForestGeometry forest_geometry(const std::vector<ForestRow>& rows, double width) {
  constexpr double kRowHeight = 28.0;
  constexpr double kTop = 40.0;
  constexpr double kBottom = 50.0;
  ForestGeometry g;
  g.width = width;
  g.height = kTop + kRowHeight * static_cast<double>(rows.size()) + kBottom;
  g.plot_left = 0.35 * width;
  g.plot_right = width - 30.0;
  double lo = 0.0, hi = 0.0;
  for (const auto& r : rows) {
    lo = std::min({lo, r.lower, r.mean});
    hi = std::max({hi, r.upper, r.mean});
  }
  const double pad = 0.05 * std::max(hi - lo, 1e-6);
  g.x_min = lo - pad;
  g.x_max = hi + pad;
  g.zero_x = g.to_x(0.0);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    ForestMark m;
    m.y = kTop + kRowHeight * (static_cast<double>(i) + 0.5);
    m.x_mean = g.to_x(rows[i].mean);
    m.x_lower = g.to_x(rows[i].lower);
    m.x_upper = g.to_x(rows[i].upper);
    g.marks.push_back(m);
  }
  return g;
}

void write_forest_svg(std::ostream& out, const std::vector<ForestRow>& rows) {
  const ForestGeometry g = forest_geometry(rows);
  const double axis_y = g.height - 35.0;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << px(g.width) << "\" height=\"" << px(g.height)
      << "\" viewBox=\"0 0 " << px(g.width) << ' ' << px(g.height) << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << px(g.plot_left) << "\" y=\"20\" font-weight=\"bold\">log(HR), 95% interval</text>\n";
  out << "<line class=\"reference\" x1=\"" << px(g.zero_x) << "\" y1=\"30\" x2=\"" << px(g.zero_x) << "\" y2=\""
      << px(axis_y) << "\" stroke=\"#888\" stroke-dasharray=\"4 3\"/>\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& m = g.marks[i];
    out << "<g class=\"row\">\n";
    out << "  <text x=\"10\" y=\"" << px(m.y + 4.0) << "\">" << xml_escape(rows[i].label) << "</text>\n";
    out << "  <line class=\"whisker\" x1=\"" << px(m.x_lower) << "\" y1=\"" << px(m.y) << "\" x2=\"" << px(m.x_upper)
        << "\" y2=\"" << px(m.y) << "\" stroke=\"black\" stroke-width=\"1.5\"/>\n";
    out << "  <rect class=\"mean\" x=\"" << px(m.x_mean - 4.0) << "\" y=\"" << px(m.y - 4.0)
        << "\" width=\"8\" height=\"8\" fill=\"black\"/>\n";
    out << "</g>\n";
  }
  out << "<line x1=\"" << px(g.plot_left) << "\" y1=\"" << px(axis_y) << "\" x2=\"" << px(g.plot_right) << "\" y2=\""
      << px(axis_y) << "\" stroke=\"black\"/>\n";
  const double span = g.x_max - g.x_min;
  const double raw_step = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw_step)));
  double step = mag;
  for (double mult : {1.0, 2.0, 5.0, 10.0}) {
    if (mult * mag >= raw_step) {
      step = mult * mag;
      break;
    }
  }
  for (double v = std::ceil(g.x_min / step) * step; v <= g.x_max + 1e-12; v += step) {
    const double x = g.to_x(v);
    const double shown = std::abs(v) < step * 1e-9 ? 0.0 : round_significant(v, 4);
    out << "<line x1=\"" << px(x) << "\" y1=\"" << px(axis_y) << "\" x2=\"" << px(x) << "\" y2=\"" << px(axis_y + 5.0)
        << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << px(x) << "\" y=\"" << px(axis_y + 18.0) << "\" text-anchor=\"middle\">"
        << format_double(shown) << "</text>\n";
  }
  out << "</svg>\n";
}

void write_trace_csv(std::ostream& out, const ChainSet& chains, std::size_t param) {
  out << "chain,iteration," << chains.names()[param] << '\n';
  for (std::size_t c = 0; c < chains.chains(); ++c) {
    for (std::size_t i = 0; i < chains.saved(); ++i) {
      const std::size_t iter = i < chains.iteration_number.size() ? chains.iteration_number[i] : i + 1;
      out << (c + 1) << ',' << iter << ',' << format_double(chains.at(c, i, param)) << '\n';
    }
  }
}

void write_density_csv(std::ostream& out, const ChainSet& chains, std::size_t param, std::size_t grid) {
  out << "chain,x,density\n";
  const auto pooled = chains.pooled(param);
  if (pooled.empty() || grid < 2) return;
  const auto [mn, mx] = std::minmax_element(pooled.begin(), pooled.end());
  for (std::size_t c = 0; c < chains.chains(); ++c) {
    const auto v = chains.chain_values(c, param);
    const double n = static_cast<double>(v.size());
    double mean = 0.0, ss = 0.0;
    for (double x : v) mean += x;
    mean /= n;
    for (double x : v) ss += (x - mean) * (x - mean);
    const double sd = v.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    const double iqr = empirical_quantile(v, 0.75) - empirical_quantile(v, 0.25);
    double spread = std::min(sd, iqr / 1.34);
    if (!(spread > 0.0)) spread = sd > 0.0 ? sd : 1e-3 * std::max(1.0, std::abs(mean));
    const double bw = 0.9 * spread * std::pow(n, -0.2);
    const double lo = *mn - 3.0 * bw;
    const double hi = *mx + 3.0 * bw;
    const double norm = 1.0 / (n * bw * std::sqrt(2.0 * std::numbers::pi));
    for (std::size_t g = 0; g < grid; ++g) {
      const double x = lo + (hi - lo) * static_cast<double>(g) / static_cast<double>(grid - 1);
      double d = 0.0;
      for (double s : v) {
        const double u = (x - s) / bw;
        d += std::exp(-0.5 * u * u);
      }
      out << (c + 1) << ',' << format_double(x) << ',' << format_double(d * norm) << '\n';
    }
  }
}

void write_diagnostics_report(std::ostream& out, const Diagnostics& diag, const ChainSet& chains,
                              const DiagnosticThresholds& t) {
  out << "verdict: " << diag.verdict << '\n';
  out << "chains: " << chains.chains() << ", saved draws per chain: " << chains.saved();
  if (chains.burnin_fraction) out << ", burn-in fraction: " << format_double(*chains.burnin_fraction);
  out << '\n';
  out << "criteria: rhat < " << format_double(t.max_rhat) << ", ess ratio >= " << format_double(t.min_ess_ratio)
      << ", saved per chain >= " << t.min_saved_per_chain << ", chains >= " << t.min_chains
      << ", burn-in fraction >= " << format_double(t.min_burnin_fraction) << '\n';
  if (!t.monitor.empty()) {
    out << "monitored:";
    for (const auto& m : t.monitor) out << ' ' << m;
    out << '\n';
  }
  std::size_t w = 9;
  for (const auto& p : diag.parameters) w = std::max(w, p.name.size());
  out << '\n' << std::left << std::setw(static_cast<int>(w)) << "parameter" << "  " << std::right << std::setw(10)
      << "rhat" << "  " << std::setw(10) << "ess" << "  " << std::setw(10) << "ess_ratio" << '\n';
  for (const auto& p : diag.parameters) {
    out << std::left << std::setw(static_cast<int>(w)) << p.name << "  " << std::right << std::setw(10)
        << (p.rhat ? format_double(round_significant(*p.rhat, 4)) : std::string("absent")) << "  " << std::setw(10)
        << format_double(round_significant(p.ess, 4)) << "  " << std::setw(10)
        << format_double(round_significant(p.ess_ratio, 4));
    if (!p.problem.empty()) out << "  " << p.problem;
    out << '\n';
  }
  if (!diag.failures.empty()) {
    out << "\nfailed criteria:\n";
    for (const auto& f : diag.failures) out << "  - " << f << '\n';
  }
}

void atomic_write(const std::filesystem::path& path, const std::function<void(std::ostream&)>& writer) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    writer(out);
    out.flush();
    if (!out) throw DataError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace survbayes
