#pragma once

// Result tables, forest plots and chain plot data.
//
// Summary values are rounded once (6 significant digits) before being written;
// the JSON file and the text table both print that same rounded double, so the two
// artifacts cannot disagree.

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "survbayes/mcmc.hpp"
#include "survbayes/posterior.hpp"

namespace survbayes {

double round_significant(double v, int digits = 6);
/// Shortest round-trip decimal representation.
std::string format_double(double v);

/// Rounds every reported field of a summary.
PosteriorSummary rounded(const PosteriorSummary& s);

void write_summary_json(std::ostream& out, const std::vector<PosteriorSummary>& rows);
std::vector<PosteriorSummary> read_summary_json(std::istream& in);
/// Aligned plain-text table with one row per summary.
void write_summary_table(std::ostream& out, const std::vector<PosteriorSummary>& rows);

struct ForestRow {
  std::string label;
  double mean = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  friend bool operator==(const ForestRow&, const ForestRow&) = default;
};
std::vector<ForestRow> forest_rows(const std::vector<PosteriorSummary>& rows);
void write_forest_csv(std::ostream& out, const std::vector<ForestRow>& rows);
std::vector<ForestRow> read_forest_csv(std::istream& in);

/// Pixel positions of each row's marker and whiskers.
struct ForestMark {
  double y = 0.0;
  double x_mean = 0.0;
  double x_lower = 0.0;
  double x_upper = 0.0;
};
struct ForestGeometry {
  double width = 0.0;
  double height = 0.0;
  double plot_left = 0.0;
  double plot_right = 0.0;
  double x_min = 0.0;  // data range mapped onto [plot_left, plot_right]
  double x_max = 0.0;
  double zero_x = 0.0;
  std::vector<ForestMark> marks;
  double to_x(double v) const;
};
ForestGeometry forest_geometry(const std::vector<ForestRow>& rows, double width = 720.0);
void write_forest_svg(std::ostream& out, const std::vector<ForestRow>& rows);

/// chain,iteration,value for one parameter.
void write_trace_csv(std::ostream& out, const ChainSet& chains, std::size_t param);
/// chain,x,density: Gaussian kernel density per chain on a shared grid.
void write_density_csv(std::ostream& out, const ChainSet& chains, std::size_t param, std::size_t grid = 128);

void write_diagnostics_report(std::ostream& out, const Diagnostics& diag, const ChainSet& chains,
                              const DiagnosticThresholds& thresholds);

/// Writes through a temporary file in the same directory, then renames it into place.
void atomic_write(const std::filesystem::path& path, const std::function<void(std::ostream&)>& writer);

}  // namespace survbayes
