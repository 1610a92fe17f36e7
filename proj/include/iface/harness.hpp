#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "iface/config.hpp"
#include "iface/decomposition.hpp"
#include "iface/diagnostics.hpp"
#include "iface/geometry.hpp"
#include "iface/wave.hpp"

namespace iface {

/// Everything measured for one epsilon.
struct EpsilonRun {
  double epsilon = 0.0;
  RunMode mode = RunMode::solver;
  bool ok = false;
  std::string error;       // message of the error that aborted the run
  std::string error_kind;  // its type name

  double sup_Theta1 = 0.0;
  double sup_Theta2 = 0.0;
  double sup_Theta3 = 0.0;
  double h1_error = 0.0;       // ||u - U||_{H1_eps}, tube and far field combined
  double h1_error_tube_sq = 0.0;
  double h1_error_far_sq = 0.0;
  double sup_shift_h1 = 0.0;   // sup_y0 ||s*(y0, .)||_{H1(S^1)}
  double sup_shift_abs = 0.0;
  double far_deviation_inside = 0.0;
  double far_deviation_outside = 0.0;
  double far_deviation = 0.0;  // inside + outside
  double far_energy = 0.0;
  double far_grad_sq = 0.0;
  double grad_U_l2 = 0.0;      // ||D U_eps||_{L2} over the tube
  double energy_drift = 0.0;
  double max_residual_normalized = 0.0;
  int uncertified_fibers = 0;  // fibers without a convexity certificate
  long steps = 0;
  double rho = 0.0;            // tube half-width actually used
  double L = 0.0;
  double h = 0.0;
  double dt = 0.0;

  std::vector<SliceDiagnostics> slices;
  std::optional<ShiftField> shift;
};

/// The far-field stride in levels for a cadence given in units of eps.
int far_field_stride(double epsilon, double dt, double cadence_eps);

/// Chart for the configured scenario; the y0 range covers (-T1, T1) plus the margin.
SurfaceChart make_chart(const RunConfig& cfg);
/// Slice lattice on (-T1, T1).
SliceGrid make_slice_grid(const RunConfig& cfg, double epsilon, double rho);
/// Solver grid covering every pullback stencil and (-T0, T0). A positive
/// snapshot_stride widens the time range so snapshots alone can be analyzed.
GridSpec make_run_grid(const RunConfig& cfg, const SurfaceChart& chart, const SliceGrid& slices,
                       double epsilon, int snapshot_stride = 0);

/// Runs one epsilon end to end. When out_dir is given, per-run tables, the
/// run JSON and (with snapshot_stride > 0) snapshots are written there.
/// Errors propagate; run_sweep isolates them.
EpsilonRun run_epsilon(const RunConfig& cfg, double epsilon,
                       const std::filesystem::path* out_dir = nullptr, int snapshot_stride = 0);

/// slices.csv, shift.csv and run.json (metrics plus the configuration).
void write_run_outputs(const RunConfig& cfg, const EpsilonRun& r,
                       const std::filesystem::path& dir);

/// Diagnostics from snapshots written by a previous run (cubic interpolation
/// at snapshot cadence).
EpsilonRun analyze_snapshots(const RunConfig& cfg, double epsilon,
                             const std::filesystem::path& snapshot_dir);

struct FitResult {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  int points = 0;
};

/// Least squares of log(value) against log(eps). Throws NonPositiveValue
/// and Error with fewer than 3 pairs.
FitResult fit_rate(const std::vector<std::pair<double, double>>& pairs);

struct FitOutcome {
  bool ok = false;
  FitResult fit;
  std::string error;
};

struct SweepReport {
  RunConfig config;
  std::vector<EpsilonRun> runs;  // in config order
  std::map<std::string, FitOutcome> fits;
};

/// Names of the swept metrics, in report order.
const std::vector<std::string>& sweep_metrics();
/// Value of a named metric for one run.
double metric_value(const EpsilonRun& r, const std::string& name);

/// Fits every metric over the successful runs.
std::map<std::string, FitOutcome> fit_all(const std::vector<EpsilonRun>& runs);

/// Runs every epsilon (concurrently up to cfg.workers), isolating failures,
/// then fits the rates. Per-run outputs go to out_root/eps_<value> when given.
SweepReport run_sweep(const RunConfig& cfg, const std::filesystem::path* out_root = nullptr);

nlohmann::json run_to_json(const EpsilonRun& r);
EpsilonRun run_from_json(const nlohmann::json& j);
/// Directory name used for one epsilon.
std::string run_dir_name(double epsilon);

}  // namespace iface
