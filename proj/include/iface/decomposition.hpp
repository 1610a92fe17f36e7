#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "iface/diagnostics.hpp"
#include "iface/field.hpp"
#include "iface/geometry.hpp"
#include "iface/profile.hpp"

namespace iface {

struct DecompositionOptions {
  double c3 = 0.1;      // hypothesis proxy: min ||v - tau Q|| <= c3 sqrt(eps)
  double delta = 0.05;  // convexity certificate probes s* +- 2 eps delta
};

struct DecompositionResult {
  double s_star = 0.0;
  double residual_orthogonality = 0.0;  // int_I (v - tau Q) tau Q'
  double residual_normalized = 0.0;     // divided by ||v|| ||tau Q'||
  double min_value = 0.0;               // ||v - tau_{s*} Q||_{L2(I)}
  double convexity_margin = 0.0;        // min sampled eta''
  bool unique = false;
  int scan_minima = 0;
};

/// ||v - tau_s Q_eps||_{L2(I)} by Simpson on the fiber grid.
double shift_distance(std::span<const double> v, double s, const FiberGrid& g,
                      const ProfileParams& p);

/// First and second derivatives in s of eta(s) = ||v - tau_s Q_eps||^2 / 2.
struct ShiftDerivatives {
  double d1 = 0.0;
  double d2 = 0.0;
};
ShiftDerivatives shift_derivatives(std::span<const double> v, double s, const FiberGrid& g,
                                   const ProfileParams& p);

/// int_I (v - tau_s Q_eps) tau_s Q_eps' dz.
double orthogonality_residual(std::span<const double> v, double s, const FiberGrid& g,
                              const ProfileParams& p);

/// L2(I) projection of a fiber onto the translates of Q_eps: scan, golden
/// section, one Newton step, convexity certificate. Throws HypothesisFailed
/// or NotUnique.
DecompositionResult optimal_shift(std::span<const double> v, const FiberGrid& g,
                                  const ProfileParams& p, const DecompositionOptions& opt = {});

/// s* sampled on the slice lattice (slice-major, n1 angles per slice).
class ShiftField {
 public:
  ShiftField() = default;
  ShiftField(std::vector<double> y0, int n1);
  /// s* = 0 everywhere on the given lattice.
  static ShiftField zero(const SliceGrid& g);

  const std::vector<double>& y0() const { return y0_; }
  int n1() const { return n1_; }
  double& operator()(int slice, int k) { return s_[index(slice, k)]; }
  double operator()(int slice, int k) const { return s_[index(slice, k)]; }

  /// Bilinear in (y0, y1); periodic in y1, constant beyond the end slices.
  double at(double y0, double y1) const;
  /// Bilinear interpolants of the grid derivatives d0 and d1 (d0_at is zero
  /// with fewer than 3 slices).
  double d0_at(double y0, double y1) const;
  double d1_at(double y0, double y1) const;

  /// Grid derivatives: fourth order periodic in y1, second order in y0
  /// (one-sided at the end slices). Throw InsufficientSlices with < 3 slices.
  double d0(int slice, int k) const;
  double d1(int slice, int k) const;

 private:
  std::size_t index(int slice, int k) const {
    return static_cast<std::size_t>(slice) * n1_ + static_cast<std::size_t>(k);
  }
  void locate(double y0, double y1, int& s, double& fs, int& k, double& fk) const;

  std::vector<double> y0_;
  int n1_ = 0;
  std::vector<double> s_;
};

/// int_{S^1} s*^2 + (d_{y0} s*)^2 + (d_{y1} s*)^2 dy1 on one slice (the
/// squared norm). Throws InsufficientSlices.
double shift_h1_norm_sq(const ShiftField& f, int slice);

/// The comparison function U_eps: Q_eps(y2 - s*(y0, y1)) in the tube and the
/// sign of O elsewhere.
class ComparisonField : public FieldSource {
 public:
  ComparisonField(const SurfaceChart& chart, ShiftField shift, ProfileParams params);

  const ShiftField& shift() const { return shift_; }
  const ProfileParams& params() const { return params_; }

  /// V_eps and its chart gradient.
  double V(double y0, double y1, double y2) const;
  Vec3 grad_V(double y0, double y1, double y2) const;

  /// U_eps(t, x) with its Cartesian space-time gradient.
  FieldSample sample(double t, double x1, double x2) const override;

  /// U_eps on every node of the grid at time t.
  Array2 sample_grid(double t, const GridSpec& grid) const;

 private:
  const SurfaceChart* chart_;
  ShiftField shift_;
  ProfileParams params_;
};

/// Runs the level observers over U_eps sampled on the grid levels of spec
/// (the same level sequence evolve() would emit), without solving the PDE.
/// With stride > 1 only levels whose index is a multiple of stride are emitted.
void emit_comparison_levels(const ComparisonField& U, const GridSpec& spec,
                            const std::vector<LevelObserver>& observers, int stride = 1);

/// Per-slice tube integrals of u - U and DU in chart coordinates (weighted
/// by |det DPsi|), per unit y0.
struct TubeComparison {
  H1Parts difference;     // u - U_eps
  double grad_U_sq = 0.0;  // int |D U_eps|^2
};
TubeComparison tube_comparison(const PullbackSlice& s, const SurfaceChart& chart,
                               const ComparisonField& U);

/// Rows y0, y1, s_star, residual.
void write_shift_csv(const std::filesystem::path& path, const ShiftField& f,
                     const std::vector<SliceDiagnostics>& diag);

}  // namespace iface
