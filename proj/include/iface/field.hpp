#pragma once

#include <filesystem>
#include <functional>
#include <utility>
#include <vector>

#include "iface/array2.hpp"
#include "iface/interpolation.hpp"
#include "iface/wave.hpp"

namespace iface {

/// Value and space-time gradient of u at a point.
struct FieldSample {
  double u = 0.0;
  double u_t = 0.0;
  double u_x1 = 0.0;
  double u_x2 = 0.0;
};

/// Anything that can evaluate u and Du at arbitrary (t, x).
class FieldSource {
 public:
  virtual ~FieldSource() = default;
  virtual FieldSample sample(double t, double x1, double x2) const = 0;
};

class AnalyticField : public FieldSource {
 public:
  using Fn = std::function<FieldSample(double, double, double)>;
  explicit AnalyticField(Fn fn) : fn_(std::move(fn)) {}
  FieldSample sample(double t, double x1, double x2) const override { return fn_(t, x1, x2); }

 private:
  Fn fn_;
};

/// Six-point Lagrange stencil in each direction around a point of a uniform
/// grid whose node (0, 0) sits at (x0, y0).
struct SpatialStencil {
  int i0 = 0;  // first node in x1
  int j0 = 0;  // first node in x2
  LagrangeStencil<6> sx;
  LagrangeStencil<6> sy;
};

/// Returns false when the six-point stencil does not fit inside [0, nx) x [0, ny).
bool make_spatial_stencil(double x1, double x2, double x0, double y0, double h, int nx, int ny,
                          SpatialStencil& out);

/// Interpolated u, u_x1, u_x2 (u_t left at 0).
FieldSample apply_stencil(const Array2& u, const SpatialStencil& s, double h);

/// Time levels at uniform cadence with quintic interpolation in space and
/// cubic interpolation in time.
class SnapshotStore : public FieldSource {
 public:
  /// Snapshots must share h, L, crop window and shape, and arrive in
  /// increasing t at a uniform spacing.
  void add(Snapshot s);
  /// Loads every snap_*.json under dir and keeps the uniformly spaced subset.
  static SnapshotStore load_directory(const std::filesystem::path& dir);

  std::size_t size() const { return snaps_.size(); }
  const Snapshot& operator[](std::size_t i) const { return snaps_[i]; }
  double t_first() const;
  double t_last() const;
  double cadence() const { return cadence_; }
  double epsilon() const { return snaps_.empty() ? 0.0 : snaps_.front().epsilon; }

  /// Throws InsufficientSnapshots when t lacks a full cubic stencil and
  /// OutOfBox when x lies outside the stored window.
  FieldSample sample(double t, double x1, double x2) const override;

 private:
  std::vector<Snapshot> snaps_;
  double cadence_ = 0.0;
};

}  // namespace iface
