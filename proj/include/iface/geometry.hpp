#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <functional>
#include <vector>

namespace iface {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;  // (t, x1, x2)
using Mat3 = Eigen::Matrix3d;

/// Minkowski inner product with signature (-, +, +).
inline double minkowski(const Vec3& a, const Vec3& b) {
  return -a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

/// Truncated Fourier series S^1 -> R^2:
/// c(s) = sum_k cos_coeffs[k] cos(k s) + sin_coeffs[k] sin(k s).
struct FourierCurve {
  std::vector<Vec2> cos_coeffs;
  std::vector<Vec2> sin_coeffs;

  struct Jet {
    Vec2 d0 = Vec2::Zero();
    Vec2 d1 = Vec2::Zero();
    Vec2 d2 = Vec2::Zero();
  };

  int n_modes() const { return static_cast<int>(cos_coeffs.size()) - 1; }
  Vec2 value(double s) const { return jet(s).d0; }
  Jet jet(double s) const;

  bool operator==(const FourierCurve&) const = default;
};

/// String data (a, b) of a d'Alembert extremal surface.
struct LoopPair {
  FourierCurve a;
  FourierCurve b;

  /// a(s) = (cos s, sin s), b(s) = (cos s, -sin s): the circle of radius cos t.
  static LoopPair collapsing_circle();
  /// a = b = (cos s, sin s); degenerate surface used to exercise error paths.
  static LoopPair degenerate_circle();

  bool operator==(const LoopPair&) const = default;
};

struct ValidationReport {
  double max_deviation_a = 0.0;  // max | |a'| - 1 |
  double max_deviation_b = 0.0;
  double tol = 0.0;
  bool passed = false;
};

/// Samples |a'| and |b'| on a dense grid of `samples` points.
ValidationReport validate_loop(const LoopPair& loop, double tol, int samples = 10000);

/// Reparametrizes a closed curve (period 2pi in its own parameter) by arc
/// length, rescales it to length 2pi and fits `n_modes` Fourier modes.
FourierCurve unit_speed_fourier(const std::function<Vec2(double)>& curve, int n_modes,
                                int samples = 4096);

/// First and second order geometric data of the surface at (y0, y1).
struct SurfaceFrame {
  Vec3 psi;   // surface point
  Vec3 t0;    // d psi / d y0
  Vec3 t1;    // d psi / d y1
  Vec3 nu;    // inward Minkowski unit normal
  Vec3 dnu0;  // d nu / d y0
  Vec3 dnu1;  // d nu / d y1
};

struct ChartJacobian {
  Mat3 matrix;  // columns d Psi / d y_i
  double det = 0.0;
};

/// The timelike extremal surface psi(y0, y1) = (y0, (a(y0+y1) + b(y0-y1))/2)
/// and its Minkowskian normal coordinates Psi = psi + y2 nu. All members are
/// pure and thread-safe.
class Surface {
 public:
  explicit Surface(LoopPair loop);

  const LoopPair& loop() const { return loop_; }

  Vec3 point(double y0, double y1) const;
  /// Throws DegenerateTangents where the induced metric is singular.
  Vec3 normal(double y0, double y1) const;
  SurfaceFrame frame(double y0, double y1) const;

  Vec3 chart_map(double y0, double y1, double y2) const;
  /// Throws SingularChart when |det| < det_floor.
  ChartJacobian jacobian(double y0, double y1, double y2, double det_floor = 1e-6) const;
  /// Map and Jacobian in one evaluation; no det-floor check.
  std::pair<Vec3, Mat3> map_and_jacobian(double y0, double y1, double y2) const;

  /// +1 when Gamma_t is traversed counterclockwise in y1.
  double orientation() const { return orientation_; }

  /// Closed polygon approximating the slice Gamma_t.
  std::vector<Vec2> slice_polygon(double t, int n) const;

 private:
  LoopPair loop_;
  double orientation_ = 1.0;
};

/// Point-in-polygon (even-odd rule).
bool polygon_contains(const std::vector<Vec2>& poly, const Vec2& x);

struct ChartDomain {
  double y0_min = -0.55;
  double y0_max = 0.55;
  double rho = 0.3;
};

struct ChartOptions {
  double det_floor = 1e-6;
  bool auto_shrink = true;   // shrink rho until the det check passes
  double shrink_factor = 0.8;
  int max_shrinks = 12;
  double table_spacing = 0.04;  // approximate physical spacing of Newton seeds
  int newton_max_iter = 50;
};

enum class InversionStatus { inside, outside, diverged };

struct ChartPoint {
  double y0 = 0.0;
  double y1 = 0.0;
  double y2 = 0.0;
  bool inside_tube = false;
  InversionStatus status = InversionStatus::outside;
  double residual = 0.0;
};

/// A validated surface restricted to (y0_min, y0_max) x S^1 x (-2rho, 2rho),
/// with a seed table for inverting Psi. Immutable after construction.
class SurfaceChart {
 public:
  /// Validates unit speed, normals and the diffeomorphism (det) condition.
  /// Throws NonUnitSpeed, SingularChart.
  SurfaceChart(Surface surface, ChartDomain domain, ChartOptions options = {});

  const Surface& surface() const { return surface_; }
  const ChartDomain& domain() const { return domain_; }
  double rho() const { return domain_.rho; }
  double min_abs_det() const { return min_abs_det_; }

  /// Throws OutOfTube unless |y2| < 2 rho.
  Vec3 map(double y0, double y1, double y2) const;

  /// Inverse of Psi on the domain; inside_tube when Newton converges to a
  /// preimage in the domain.
  ChartPoint invert(double t, double x1, double x2) const;
  /// Newton from a nearby known preimage; falls back to invert() on failure.
  ChartPoint invert_from(double t, double x1, double x2, const ChartPoint& guess) const;
  /// Cheap necessary condition for invert() to succeed.
  bool maybe_in_tube(double t, double x1, double x2) const;

  /// +1 inside the bounded component O, -1 outside.
  int region_sign(double t, double x1, double x2) const;

  /// Euclidean bounding box (t, x1, x2) of Psi over the given y-box.
  std::pair<Vec3, Vec3> bounding_box(double y0_lo, double y0_hi, double y2_abs,
                                     int n1 = 256, int n2 = 9) const;

  /// Writes y0,y1,psi0,psi1,psi2,nu0,nu1,nu2,detDPsi on an n0 x n1 grid.
  void export_csv(const std::filesystem::path& path, int n0, int n1) const;

 private:
  void build_seed_table();
  bool validate_det(double rho, double* min_det) const;
  bool in_domain(double y0, double y2) const;
  bool bucket_index(const Vec3& x, int idx[3]) const;
  ChartPoint newton(const Vec3& target, Vec3 y) const;

  Surface surface_;
  ChartDomain domain_;
  ChartOptions options_;
  double min_abs_det_ = 0.0;

  struct Seed {
    Vec3 y;
    Vec3 p;
  };
  std::vector<Seed> seeds_;
  Vec3 box_lo_;
  double cell_ = 0.0;
  int nb_[3] = {0, 0, 0};
  std::vector<std::vector<int>> buckets_;
  std::vector<char> near_;  // bucket or a neighbor holds a seed
};

double wrap_angle(double y1);

/// Even-odd classification of the row {(x0 + i dx, y) : 0 <= i < n} against a
/// closed polygon, in O(vertices + n).
void polygon_row_inside(const std::vector<Vec2>& poly, double y, double x0, double dx, int n,
                        std::vector<char>& inside);

/// Region data for every node of a uniform grid at time t: the sign of O and,
/// for nodes inside the tube, their chart coordinates.
struct GridClassification {
  int nx = 0;
  int ny = 0;
  std::vector<signed char> sign;  // +1 in O, -1 outside
  std::vector<ChartPoint> points;  // inside_tube set only for tube nodes

  std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * nx + i; }
};

GridClassification classify_grid(const SurfaceChart& chart, double t, double x0, double y0,
                                 double h, int nx, int ny);

}  // namespace iface
