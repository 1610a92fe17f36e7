#include "iface/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "iface/errors.hpp"
#include "iface/quadrature.hpp"

namespace iface {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double sign(double z) { return (z > 0.0) - (z < 0.0); }
}  // namespace

SliceGrid SliceGrid::midpoints(double y0_lo, double y0_hi, int n_slices, int n1, FiberGrid fiber) {
  if (n_slices < 1 || !(y0_hi > y0_lo) || n1 < 4) {
    throw ConfigError("slice grid needs n_slices >= 1, y0_hi > y0_lo and n1 >= 4");
  }
  SliceGrid g;
  g.n1 = n1;
  g.fiber = fiber;
  const double d = (y0_hi - y0_lo) / n_slices;
  for (int s = 0; s < n_slices; ++s) {
    g.y0.push_back(y0_lo + (s + 0.5) * d);
  }
  return g;
}

double SliceGrid::dy0() const {
  if (y0.size() < 2) {
    return 0.0;
  }
  return (y0.back() - y0.front()) / static_cast<double>(y0.size() - 1);
}

double SliceGrid::y1(int k) const { return kTwoPi * k / n1; }

PullbackSlice::PullbackSlice(double y0_, int n1_, const FiberGrid& fiber_)
    : y0(y0_), n1(n1_), fiber(fiber_) {
  const int nz = fiber.size();
  for (Array2* a : {&v, &u_t, &u_x1, &u_x2, &dv0, &dv1, &dv2, &det}) {
    *a = Array2(nz, n1);
  }
}

std::span<const double> PullbackSlice::fiber_values(int k) const {
  return {v.data() + static_cast<std::size_t>(k) * fiber.size(),
          static_cast<std::size_t>(fiber.size())};
}

std::span<const double> PullbackSlice::fiber_dv2(int k) const {
  return {dv2.data() + static_cast<std::size_t>(k) * fiber.size(),
          static_cast<std::size_t>(fiber.size())};
}

void complete_chain_rule(PullbackSlice& s, const SurfaceChart& chart) {
  const int nz = s.fiber.size();
#pragma omp parallel for schedule(static)
  for (int k = 0; k < s.n1; ++k) {
    const SurfaceFrame f = chart.surface().frame(s.y0, kTwoPi * k / s.n1);
    for (int i = 0; i < nz; ++i) {
      const double z = s.fiber.z(i);
      Mat3 J;
      J.col(0) = f.t0 + z * f.dnu0;
      J.col(1) = f.t1 + z * f.dnu1;
      J.col(2) = f.nu;
      const Vec3 Du(s.u_t(i, k), s.u_x1(i, k), s.u_x2(i, k));
      s.dv0(i, k) = Du.dot(J.col(0));
      s.dv1(i, k) = Du.dot(J.col(1));
      s.dv2(i, k) = Du.dot(J.col(2));
      s.det(i, k) = std::abs(J.determinant());
    }
  }
}

PullbackSlice pullback(const FieldSource& src, const SurfaceChart& chart, double y0,
                       const FiberGrid& fiber, int n1) {
  PullbackSlice s(y0, n1, fiber);
  const int nz = fiber.size();
  for (int k = 0; k < n1; ++k) {
    const SurfaceFrame f = chart.surface().frame(y0, kTwoPi * k / n1);
    for (int i = 0; i < nz; ++i) {
      const Vec3 p = f.psi + fiber.z(i) * f.nu;
      const FieldSample fs = src.sample(p[0], p[1], p[2]);
      s.v(i, k) = fs.u;
      s.u_t(i, k) = fs.u_t;
      s.u_x1(i, k) = fs.u_x1;
      s.u_x2(i, k) = fs.u_x2;
    }
  }
  complete_chain_rule(s, chart);
  return s;
}

std::pair<double, double> slice_time_range(const SurfaceChart& chart, const SliceGrid& grid) {
  double lo = INFINITY;
  double hi = -INFINITY;
  const double rho = grid.fiber.rho;
  for (double y0 : grid.y0) {
    for (int k = 0; k < grid.n1; ++k) {
      const SurfaceFrame f = chart.surface().frame(y0, grid.y1(k));
      // Psi^0 is affine in y2, so the extremes sit at the fiber ends.
      for (double z : {-rho, rho}) {
        const double t = f.psi[0] + z * f.nu[0];
        lo = std::min(lo, t);
        hi = std::max(hi, t);
      }
    }
  }
  return {lo, hi};
}

// ---------------------------------------------------------------------------

StreamingPullback::StreamingPullback(const SurfaceChart& chart, SliceGrid grid,
                                     const GridSpec& spec)
    : chart_(&chart), grid_(std::move(grid)), spec_(spec) {
  const int nz = grid_.fiber.size();
  const std::size_t n = grid_.y0.size() * grid_.points_per_slice();
  t_.resize(n);
  x1_.resize(n);
  x2_.resize(n);
  first_.resize(n);
  std::size_t p = 0;
  for (double y0 : grid_.y0) {
    for (int k = 0; k < grid_.n1; ++k) {
      const SurfaceFrame f = chart.surface().frame(y0, grid_.y1(k));
      for (int i = 0; i < nz; ++i, ++p) {
        const Vec3 P = f.psi + grid_.fiber.z(i) * f.nu;
        t_[p] = P[0];
        x1_[p] = P[1];
        x2_[p] = P[2];
        first_[p] = static_cast<long>(std::floor((P[0] - spec_.t_start) / spec_.dt)) - 1;
      }
    }
  }
  level_min_ = *std::min_element(first_.begin(), first_.end());
  level_max_ = *std::max_element(first_.begin(), first_.end()) + 3;
  const std::size_t nb = static_cast<std::size_t>(level_max_ - level_min_ + 1);
  offset_.assign(nb + 1, 0);
  for (long f : first_) {
    ++offset_[static_cast<std::size_t>(f - level_min_) + 1];
  }
  for (std::size_t b = 0; b < nb; ++b) {
    offset_[b + 1] += offset_[b];
  }
  order_.resize(n);
  std::vector<std::size_t> fill(offset_.begin(), offset_.end() - 1);
  for (std::size_t q = 0; q < n; ++q) {
    order_[fill[static_cast<std::size_t>(first_[q] - level_min_)]++] = q;
  }
  acc_.assign(4 * n, 0.0);
  hits_.assign(n, 0);
  out_of_box_.assign(n, 0);
}

void StreamingPullback::operator()(const LevelView& lv) {
  const long n = lv.level;
  if (n < level_min_ || n > level_max_) {
    return;
  }
  const double dt = spec_.dt;
  const int nx = lv.curr.nx();
  const int ny = lv.curr.ny();
  const double x0 = spec_.x1(0);
  const double y0 = spec_.x2(0);
  for (long f = std::max(n - 3, level_min_); f <= std::min(n, level_max_ - 3); ++f) {
    const std::size_t b = static_cast<std::size_t>(f - level_min_);
    const long lo = static_cast<long>(offset_[b]);
    const long hi = static_cast<long>(offset_[b + 1]);
    const int slot = static_cast<int>(n - f);
#pragma omp parallel for schedule(static)
    for (long q = lo; q < hi; ++q) {
      const std::size_t p = order_[static_cast<std::size_t>(q)];
      const double r = (t_[p] - spec_.t_start) / dt;
      const LagrangeStencil<4> st = lagrange_stencil<4>(r - std::floor(r), -1);
      SpatialStencil sp;
      if (!make_spatial_stencil(x1_[p], x2_[p], x0, y0, spec_.h, nx, ny, sp)) {
        out_of_box_[p] = 1;
        continue;
      }
      const FieldSample s = apply_stencil(lv.curr, sp, spec_.h);
      double* a = &acc_[4 * p];
      a[0] += st.w[slot] * s.u;
      a[1] += st.dw[slot] / dt * s.u;
      a[2] += st.w[slot] * s.u_x1;
      a[3] += st.w[slot] * s.u_x2;
      ++hits_[p];
    }
  }
}

std::vector<PullbackSlice> StreamingPullback::finish() const {
  const std::size_t n = t_.size();
  for (std::size_t p = 0; p < n; ++p) {
    if (out_of_box_[p]) {
      std::ostringstream os;
      os << "pullback point (" << t_[p] << ", " << x1_[p] << ", " << x2_[p]
         << ") has an interpolation stencil outside the grid";
      throw OutOfBox(os.str());
    }
    if (hits_[p] != 4) {
      std::ostringstream os;
      os << "pullback point at t = " << t_[p] << " saw " << static_cast<int>(hits_[p])
         << " of 4 time levels; extend the run to levels [" << level_min_ << ", " << level_max_
         << "]";
      throw InsufficientSnapshots(os.str());
    }
  }
  std::vector<PullbackSlice> out;
  const int nz = grid_.fiber.size();
  std::size_t p = 0;
  for (double y0 : grid_.y0) {
    PullbackSlice s(y0, grid_.n1, grid_.fiber);
    for (int k = 0; k < grid_.n1; ++k) {
      for (int i = 0; i < nz; ++i, ++p) {
        s.v(i, k) = acc_[4 * p];
        s.u_t(i, k) = acc_[4 * p + 1];
        s.u_x1(i, k) = acc_[4 * p + 2];
        s.u_x2(i, k) = acc_[4 * p + 3];
      }
    }
    complete_chain_rule(s, *chart_);
    out.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------

const char* to_string(Theta1Variant v) {
  return v == Theta1Variant::inverse_eps ? "inverse_eps" : "inverse_eps_squared";
}

namespace {

double potential_weight(double epsilon, Theta1Variant variant) {
  return variant == Theta1Variant::inverse_eps ? 1.0 / (2.0 * epsilon)
                                               : 1.0 / (2.0 * epsilon * epsilon);
}

}  // namespace

double theta1(std::span<const double> v, std::span<const double> dv, const FiberGrid& g,
              double epsilon, Theta1Variant variant) {
  const double pw = potential_weight(epsilon, variant);
  std::vector<double> f(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double z = g.z(static_cast<int>(i));
    const double w = v[i] * v[i] - 1.0;
    f[i] = (1.0 + z * z) * (0.5 * epsilon * dv[i] * dv[i] + pw * w * w);
  }
  return simpson(f, g.dz()) - c0();
}

double theta2(std::span<const double> v, const FiberGrid& g) {
  std::vector<double> f(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double z = g.z(static_cast<int>(i));
    const double d = v[i] - sign(z);
    f[i] = std::abs(z) * d * d;
  }
  return simpson(f, g.dz());
}

SliceDiagnostics theta_slice(const PullbackSlice& s, double epsilon, Theta1Variant variant) {
  SliceDiagnostics d;
  d.y0 = s.y0;
  d.variant = variant;
  const int nz = s.fiber.size();
  const double pw = potential_weight(epsilon, variant);
  const std::vector<double> w = simpson_weights(static_cast<std::size_t>(nz), s.fiber.dz());
  d.theta1_fiber.resize(s.n1);
  d.theta2_fiber.resize(s.n1);
  std::vector<double> t1(s.n1), t2(s.n1), t3(s.n1), t3t(s.n1);
  for (int k = 0; k < s.n1; ++k) {
    double a1 = 0.0, a2 = 0.0, a3 = 0.0, a3t = 0.0;
    for (int i = 0; i < nz; ++i) {
      const double z = s.fiber.z(i);
      const double v = s.v(i, k);
      const double pot = (v * v - 1.0) * (v * v - 1.0);
      const double g2 = s.dv2(i, k) * s.dv2(i, k);
      const double tang = 0.5 * epsilon * (s.dv0(i, k) * s.dv0(i, k) + s.dv1(i, k) * s.dv1(i, k));
      const double dev = v - sign(z);
      a1 += w[i] * (1.0 + z * z) * (0.5 * epsilon * g2 + pw * pot);
      a2 += w[i] * z * z * dev * dev;
      a3 += w[i] * (tang + z * z * (0.5 * epsilon * g2 + pot / (2.0 * epsilon)));
      a3t += w[i] * tang;
      d.sup_abs_v = std::max(d.sup_abs_v, std::abs(v));
    }
    t1[k] = a1 - c0();
    t2[k] = a2;
    t3[k] = a3;
    t3t[k] = a3t;
    d.theta1_fiber[k] = theta1(s.fiber_values(k), s.fiber_dv2(k), s.fiber, epsilon, variant);
    d.theta2_fiber[k] = theta2(s.fiber_values(k), s.fiber);
  }
  d.Theta1 = periodic_trapezoid(t1, kTwoPi);
  d.Theta2 = periodic_trapezoid(t2, kTwoPi);
  d.Theta3 = periodic_trapezoid(t3, kTwoPi);
  d.Theta3_tangential = periodic_trapezoid(t3t, kTwoPi);
  return d;
}

double h1eps_norm(const H1Parts& p, double epsilon) {
  return std::sqrt(p.l2 / epsilon + epsilon * p.grad);
}

H1Parts fiber_h1_parts(std::span<const double> w, std::span<const double> dw, const FiberGrid& g) {
  std::vector<double> a(w.size()), b(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    a[i] = w[i] * w[i];
    b[i] = dw[i] * dw[i];
  }
  return {simpson(a, g.dz()), simpson(b, g.dz())};
}

H1Parts grid_h1_parts(const Array2& w, double h, const std::vector<char>* mask) {
  H1Parts p;
  const int nx = w.nx();
  const int ny = w.ny();
  for (int j = 1; j < ny - 1; ++j) {
    for (int i = 1; i < nx - 1; ++i) {
      if (mask && !(*mask)[static_cast<std::size_t>(j) * nx + i]) {
        continue;
      }
      const double gx = (w(i + 1, j) - w(i - 1, j)) / (2.0 * h);
      const double gy = (w(i, j + 1) - w(i, j - 1)) / (2.0 * h);
      p.l2 += w(i, j) * w(i, j);
      p.grad += gx * gx + gy * gy;
    }
  }
  p.l2 *= h * h;
  p.grad *= h * h;
  return p;
}

// ---------------------------------------------------------------------------

FarFieldAccumulator::FarFieldAccumulator(const SurfaceChart& chart, double T0, double y0_lo,
                                         double y0_hi, double epsilon, int stride)
    : chart_(&chart),
      T0_(T0),
      y0_lo_(y0_lo),
      y0_hi_(y0_hi),
      epsilon_(epsilon),
      stride_(std::max(1, stride)) {}

void FarFieldAccumulator::operator()(const LevelView& lv) {
  if (lv.level % stride_ != 0) {
    return;
  }
  const double span = stride_ * std::abs(lv.dt);
  const double a = std::max(lv.t - 0.5 * span, -T0_);
  const double b = std::min(lv.t + 0.5 * span, T0_);
  if (!(b > a)) {
    return;
  }
  const double wt = b - a;
  const GridSpec& g = lv.grid;
  const int nx = lv.curr.nx();
  const int ny = lv.curr.ny();
  const double h = g.h;
  const GridClassification cls = classify_grid(*chart_, lv.t, g.x1(0), g.x2(0), h, nx, ny);
  const double rho = chart_->rho();
  struct Row {
    double in = 0.0, out = 0.0, energy = 0.0, grad = 0.0;
  };
  std::vector<Row> rows(ny);
#pragma omp parallel for schedule(static)
  for (int j = 2; j < ny - 2; ++j) {
    Row r;
    for (int i = 2; i < nx - 2; ++i) {
      const std::size_t k = cls.index(i, j);
      const ChartPoint& cp = cls.points[k];
      if (cp.inside_tube && std::abs(cp.y2) < rho && cp.y0 > y0_lo_ && cp.y0 < y0_hi_) {
        continue;  // node belongs to N'
      }
      const Array2& u = lv.curr;
      const double c = u(i, j);
      const double gx = (-u(i + 2, j) + 8.0 * u(i + 1, j) - 8.0 * u(i - 1, j) + u(i - 2, j)) /
                        (12.0 * h);
      const double gy = (-u(i, j + 2) + 8.0 * u(i, j + 1) - 8.0 * u(i, j - 1) + u(i, j - 2)) /
                        (12.0 * h);
      const double ut = lv.u_t(i, j);
      const double du2 = ut * ut + gx * gx + gy * gy;
      const double pot = (c * c - 1.0) * (c * c - 1.0);
      if (cls.sign[k] > 0) {
        r.in += (c - 1.0) * (c - 1.0);
      } else {
        r.out += (c + 1.0) * (c + 1.0);
      }
      r.energy += 0.5 * epsilon_ * du2 + pot / (2.0 * epsilon_);
      r.grad += du2;
    }
    rows[j] = r;
  }
  Row sum;
  for (const Row& r : rows) {
    sum.in += r.in;
    sum.out += r.out;
    sum.energy += r.energy;
    sum.grad += r.grad;
  }
  const double w = h * h * wt;
  totals_.deviation_inside += w * sum.in;
  totals_.deviation_outside += w * sum.out;
  totals_.energy += w * sum.energy;
  totals_.grad_sq += w * sum.grad;
  totals_.time_covered += wt;
  ++totals_.levels;
}

void write_slice_csv(const std::filesystem::path& path, const std::vector<SliceDiagnostics>& d) {
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot open slice table for writing: " + path.string());
  }
  out << "y0,Theta1,Theta2,Theta3,sup_abs_v,max_theta1,max_theta2\n";
  out.precision(12);
  for (const auto& s : d) {
    const double m1 = s.theta1_fiber.empty()
                          ? 0.0
                          : *std::max_element(s.theta1_fiber.begin(), s.theta1_fiber.end());
    const double m2 = s.theta2_fiber.empty()
                          ? 0.0
                          : *std::max_element(s.theta2_fiber.begin(), s.theta2_fiber.end());
    out << s.y0 << ',' << s.Theta1 << ',' << s.Theta2 << ',' << s.Theta3 << ',' << s.sup_abs_v
        << ',' << m1 << ',' << m2 << '\n';
  }
  if (!out) {
    throw IoError("failed writing slice table: " + path.string());
  }
}

}  // namespace iface
