#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "iface/array2.hpp"
#include "iface/field.hpp"
#include "iface/geometry.hpp"
#include "iface/profile.hpp"
#include "iface/wave.hpp"

namespace iface {

/// The (y0, y1, y2) sampling lattice of the diagnostics: slices at the
/// midpoints of a uniform partition of (y0_lo, y0_hi), n1 angles and a fiber grid.
struct SliceGrid {
  std::vector<double> y0;
  int n1 = 256;
  FiberGrid fiber;

  static SliceGrid midpoints(double y0_lo, double y0_hi, int n_slices, int n1, FiberGrid fiber);
  /// Slice spacing (the y0 quadrature weight).
  double dy0() const;
  double y1(int k) const;
  std::size_t points_per_slice() const {
    return static_cast<std::size_t>(n1) * fiber.size();
  }
};

/// v = u o Psi on one slice. Arrays have x-extent fiber.size() and
/// y-extent n1, so (i, k) is fiber node i on angle k.
struct PullbackSlice {
  double y0 = 0.0;
  int n1 = 0;
  FiberGrid fiber;
  Array2 v;
  Array2 u_t;   // Du at Psi(y), Cartesian components
  Array2 u_x1;
  Array2 u_x2;
  Array2 dv0;   // chart derivatives d v / d y_i
  Array2 dv1;
  Array2 dv2;
  Array2 det;   // |det DPsi|

  PullbackSlice() = default;
  PullbackSlice(double y0, int n1, const FiberGrid& fiber);

  std::span<const double> fiber_values(int k) const;
  std::span<const double> fiber_dv2(int k) const;
};

/// Fills dv0, dv1, dv2 and det from the sampled Du by the chain rule.
void complete_chain_rule(PullbackSlice& s, const SurfaceChart& chart);

/// Samples a field source on one slice (direct evaluation, no streaming).
/// Propagates InsufficientSnapshots / OutOfBox from the source.
PullbackSlice pullback(const FieldSource& src, const SurfaceChart& chart, double y0,
                       const FiberGrid& fiber, int n1);

/// Time range [t_min, t_max] spanned by Psi over the slice lattice.
std::pair<double, double> slice_time_range(const SurfaceChart& chart, const SliceGrid& grid);

/// Level observer that assembles pullback slices while the solver runs, so
/// no snapshot history is kept. Uses cubic interpolation over consecutive
/// time levels and quintic interpolation in space.
class StreamingPullback {
 public:
  StreamingPullback(const SurfaceChart& chart, SliceGrid grid, const GridSpec& spec);

  void operator()(const LevelView& lv);

  /// First and last level indices the observer needs.
  long level_min() const { return level_min_; }
  long level_max() const { return level_max_; }

  /// Throws InsufficientSnapshots if some point missed part of its stencil
  /// and OutOfBox if a stencil left the grid.
  std::vector<PullbackSlice> finish() const;

 private:
  const SurfaceChart* chart_;
  SliceGrid grid_;
  GridSpec spec_;
  std::vector<double> t_;
  std::vector<double> x1_;
  std::vector<double> x2_;
  std::vector<double> acc_;  // 4 per point: u, u_t, u_x1, u_x2
  std::vector<unsigned char> hits_;
  std::vector<unsigned char> out_of_box_;
  std::vector<long> first_;          // first stencil level of each point
  std::vector<std::size_t> order_;   // points sorted by first_
  std::vector<std::size_t> offset_;  // bucket starts into order_, by first_ - level_min_
  long level_min_ = 0;
  long level_max_ = 0;
};

enum class Theta1Variant {
  inverse_eps,          // potential weight 1/(2 eps), consistent with c0
  inverse_eps_squared,  // potential weight 1/(2 eps^2)
};

const char* to_string(Theta1Variant v);

/// theta_1 = int_I (1 + z^2) ((eps/2) v'^2 + (1/(2eps)) (v^2 - 1)^2) dz - c0.
double theta1(std::span<const double> v, std::span<const double> dv, const FiberGrid& g,
              double epsilon, Theta1Variant variant = Theta1Variant::inverse_eps);
/// theta_2 = int_I |z| (v - sign z)^2 dz.
double theta2(std::span<const double> v, const FiberGrid& g);

struct SliceDiagnostics {
  double y0 = 0.0;
  double Theta1 = 0.0;
  double Theta2 = 0.0;
  double Theta3 = 0.0;
  double Theta3_tangential = 0.0;  // the (eps/2)(dv0^2 + dv1^2) part
  double sup_abs_v = 0.0;
  Theta1Variant variant = Theta1Variant::inverse_eps;
  std::vector<double> theta1_fiber;
  std::vector<double> theta2_fiber;
  std::vector<double> s_star;     // filled by the decomposition
  std::vector<double> residual;   // orthogonality residual per fiber
};

/// Simpson in y2 and the periodic trapezoid rule in y1.
SliceDiagnostics theta_slice(const PullbackSlice& s, double epsilon,
                             Theta1Variant variant = Theta1Variant::inverse_eps);

/// Squared pieces of the H^1_eps norm: l2 = int w^2, grad = int |Dw|^2.
struct H1Parts {
  double l2 = 0.0;
  double grad = 0.0;

  H1Parts& operator+=(const H1Parts& o) {
    l2 += o.l2;
    grad += o.grad;
    return *this;
  }
};

/// (l2 / eps + eps grad)^(1/2).
double h1eps_norm(const H1Parts& p, double epsilon);

/// One-dimensional pieces of w on a fiber (Simpson).
H1Parts fiber_h1_parts(std::span<const double> w, std::span<const double> dw, const FiberGrid& g);

/// Cartesian pieces of w on a uniform 2D grid (single time level): second
/// order centred differences, nodes restricted by mask when given.
H1Parts grid_h1_parts(const Array2& w, double h, const std::vector<char>* mask = nullptr);

struct FarFieldTotals {
  double deviation_inside = 0.0;   // int over M cap O of (u - 1)^2
  double deviation_outside = 0.0;  // int over M minus O of (u + 1)^2
  double energy = 0.0;             // int over M of (eps/2)|Du|^2 + (u^2 - 1)^2/(2eps)
  double grad_sq = 0.0;            // int over M of |Du|^2
  double time_covered = 0.0;
  int levels = 0;
};

/// Accumulates space-time integrals over M = ((-T0, T0) x R^2) minus N', with
/// N' = Psi((y0_lo, y0_hi) x S^1 x (-rho, rho)). Samples every stride-th level.
class FarFieldAccumulator {
 public:
  FarFieldAccumulator(const SurfaceChart& chart, double T0, double y0_lo, double y0_hi,
                      double epsilon, int stride);
  void operator()(const LevelView& lv);
  const FarFieldTotals& totals() const { return totals_; }

 private:
  const SurfaceChart* chart_;
  double T0_;
  double y0_lo_;
  double y0_hi_;
  double epsilon_;
  int stride_;
  FarFieldTotals totals_;
};

/// Rows y0, Theta1, Theta2, Theta3, sup_abs_v, max_theta1, max_theta2.
void write_slice_csv(const std::filesystem::path& path, const std::vector<SliceDiagnostics>& d);

}  // namespace iface
