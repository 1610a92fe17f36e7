#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "iface/harness.hpp"

namespace iface {

/// Plot window in log10 coordinates.
struct PlotAxes {
  double x_lo = 0.0;
  double x_hi = 1.0;
  double y_lo = 0.0;
  double y_hi = 1.0;
};

/// Log-log window covering every positive point with a 10% margin on each
/// side (a one-decade window around a single value).
PlotAxes plot_axes(const std::vector<std::pair<double, double>>& points);

/// Log-log scatter of (eps, value) with the fitted line when given.
std::string render_svg(const std::string& title, const std::vector<std::pair<double, double>>& points,
                       const FitOutcome* fit);

/// Deterministic JSON summary of a sweep (no timings).
nlohmann::json sweep_summary(const SweepReport& report);

/// Writes sweep.csv, summary.json and plots/<metric>.svg under dir and
/// returns the written paths. An empty sweep raises before anything is written.
std::vector<std::filesystem::path> emit_report(const SweepReport& report,
                                               const std::filesystem::path& dir);

/// Rebuilds a report from the per-epsilon run.json files under dir.
SweepReport load_sweep(const std::filesystem::path& dir);

}  // namespace iface
