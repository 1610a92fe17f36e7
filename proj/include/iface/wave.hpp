#pragma once

#include <filesystem>
#include <functional>
#include <limits>
#include <vector>

#include "iface/array2.hpp"
#include "iface/geometry.hpp"
#include "iface/profile.hpp"

namespace iface {

enum class BoundaryMode {
  dirichlet_box,     // square [-L, L]^2, outer ring frozen
  periodic_x2_strip  // [-L, L] x (periodic x2 of strip_ny nodes), x1 ends frozen
};

/// Uniform space-time grid for the leapfrog solver. The run covers
/// [t_begin, t_end] and starts from data given at t_start.
struct GridSpec {
  double L = 2.0;
  double h = 0.01;
  double dt = 0.002;
  double t_start = 0.0;
  double t_end = 0.5;
  double t_begin = std::numeric_limits<double>::quiet_NaN();  // NaN: same as t_start
  BoundaryMode boundary = BoundaryMode::dirichlet_box;
  int strip_ny = 4;

  static constexpr double cfl_safety = 0.5;

  int nx() const;
  int ny() const;
  double x1(int i) const { return -L + i * h; }
  double x2(int j) const;
  double backward_end() const;
  /// Longest time span covered from t_start in either direction.
  double span() const;

  /// Grid obeying the stability and margin rules: h = epsilon / h_per_epsilon,
  /// dt = min(cfl h / sqrt 2, 0.2 epsilon), L >= r_max + span + 0.5 rounded up
  /// to a whole number of cells.
  static GridSpec for_interface(double epsilon, double t_begin, double t_start, double t_end,
                                double r_max, double h_per_epsilon = 8.0);

  /// Throws InvalidGrid when a rule is violated. Pass r_max < 0 to skip the
  /// box-margin rule.
  void validate(double epsilon, double r_max = -1.0) const;
};

/// Field state of one evolution direction. dt_signed < 0 runs backward.
struct SpacetimeField {
  GridSpec grid;
  double epsilon = 0.05;
  double dt_signed = 0.0;
  double t = 0.0;
  long level = 0;
  Array2 u_prev;
  Array2 u_curr;
  Array2 scratch;

  static constexpr double blowup_guard = 1.5;
};

/// Position and velocity at t_start.
struct InitialData {
  Array2 u;
  Array2 u_t;
};

/// u = Q_eps(d) with the clamped signed distance d, u_t = Q_eps'(d) d_t in the tube.
InitialData interface_initial_data(const SurfaceChart& chart, const ProfileParams& params,
                                   const GridSpec& grid);

/// Builds the first two time levels with a second order Taylor start.
SpacetimeField start_field(const InitialData& data, const GridSpec& grid, double epsilon,
                           double direction);

/// interface_initial_data followed by a forward start.
SpacetimeField prepare_initial_data(const SurfaceChart& chart, const ProfileParams& params,
                                    const GridSpec& grid);

/// One leapfrog step. Throws BlowUp when |u| exceeds the guard.
void step(SpacetimeField& f);

/// Discrete energy at the level t with u_t = (next - prev) / (2 dt).
double level_energy(const Array2& prev, const Array2& curr, const Array2& next,
                    const GridSpec& grid, double epsilon);

/// Energy of the current level of f (computes the next level internally).
double total_energy(const SpacetimeField& f);

/// View of a time level handed to observers: u at the level and its two
/// temporal neighbours, so u_t = (next - prev) / (2 dt) is centred.
struct LevelView {
  double t;
  long level;  // signed index: t = t_start + level * |dt|
  double dt;   // signed step
  const Array2& prev;
  const Array2& curr;
  const Array2& next;
  const GridSpec& grid;

  double u_t(int i, int j) const { return (next(i, j) - prev(i, j)) / (2.0 * dt); }
};

using LevelObserver = std::function<void(const LevelView&)>;

struct EvolveStats {
  long steps_forward = 0;
  long steps_backward = 0;
  double energy_initial = 0.0;
  double max_relative_drift = 0.0;
};

/// Evolves forward to t_end and backward to t_begin, emitting every level
/// exactly once (level 0 with the forward run). Energy is sampled every
/// energy_stride levels.
EvolveStats evolve(const InitialData& data, const GridSpec& grid, double epsilon,
                   const std::vector<LevelObserver>& observers, int energy_stride = 16);

/// A persisted time level, optionally cropped to [i0, i0+nx) x [j0, j0+ny).
struct Snapshot {
  double t = 0.0;
  double h = 0.0;
  double L = 0.0;
  double epsilon = 0.0;
  int i0 = 0;
  int j0 = 0;
  Array2 u;
};

/// Writes <stem>.bin (raw little-endian doubles) and <stem>.json.
void write_snapshot(const Snapshot& s, const std::filesystem::path& stem);
Snapshot read_snapshot(const std::filesystem::path& stem);

/// Observer that persists every stride-th level plus the first and last ones
/// it sees. stride <= 0 keeps only the first and last.
class SnapshotWriter {
 public:
  SnapshotWriter(std::filesystem::path dir, int stride, double epsilon);
  void operator()(const LevelView& lv);
  /// Writes the last seen level if it was not already written; returns the
  /// list of written stems.
  std::vector<std::filesystem::path> finish();

 private:
  void write(const LevelView& lv);

  std::filesystem::path dir_;
  int stride_;
  double epsilon_;
  std::vector<std::filesystem::path> written_;
  long last_written_ = std::numeric_limits<long>::min();
  bool have_last_ = false;
  Snapshot last_;
  long last_level_ = 0;
};

}  // namespace iface
