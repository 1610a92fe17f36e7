#include "iface/decomposition.hpp"

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
}  // namespace

double shift_distance(std::span<const double> v, double s, const FiberGrid& g,
                      const ProfileParams& p) {
  const int n = g.size();
  const double h = g.dz();
  double odd = 0.0, even = 0.0, ends = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d = v[i] - Q_eps(g.z(i) - s, p);
    const double f = d * d;
    if (i == 0 || i == n - 1) {
      ends += f;
    } else if (i % 2 == 1) {
      odd += f;
    } else {
      even += f;
    }
  }
  return std::sqrt(std::max(0.0, h / 3.0 * (ends + 4.0 * odd + 2.0 * even)));
}

ShiftDerivatives shift_derivatives(std::span<const double> v, double s, const FiberGrid& g,
                                   const ProfileParams& p) {
  const int n = g.size();
  const std::vector<double> w = simpson_weights(static_cast<std::size_t>(n), g.dz());
  ShiftDerivatives r;
  for (int i = 0; i < n; ++i) {
    const Jet1 Q = Q_eps_jet(g.z(i) - s, p);
    const double d = v[i] - Q.v;
    r.d1 += w[i] * d * Q.d1;
    r.d2 += w[i] * (Q.d1 * Q.d1 - d * Q.d2);
  }
  return r;
}

double orthogonality_residual(std::span<const double> v, double s, const FiberGrid& g,
                              const ProfileParams& p) {
  return shift_derivatives(v, s, g, p).d1;
}

DecompositionResult optimal_shift(std::span<const double> v, const FiberGrid& g,
                                  const ProfileParams& p, const DecompositionOptions& opt) {
  if (static_cast<int>(v.size()) != g.size()) {
    throw Error("optimal_shift: fiber samples do not match the grid");
  }
  const double eps = p.epsilon;
  const double half = 0.5 * p.rho;
  const int m = std::max(2, static_cast<int>(std::ceil(2.0 * half / (eps / 8.0))));
  const double ds = 2.0 * half / m;
  std::vector<double> phi(m + 1);
  int jmin = 0;
  for (int j = 0; j <= m; ++j) {
    phi[j] = shift_distance(v, -half + j * ds, g, p);
    if (phi[j] < phi[jmin]) {
      jmin = j;
    }
  }
  if (!(phi[jmin] <= opt.c3 * std::sqrt(eps))) {
    std::ostringstream os;
    os << "no recognizable interface: min ||v - tau Q|| = " << phi[jmin] << " > c3 sqrt(eps) = "
       << opt.c3 * std::sqrt(eps);
    throw HypothesisFailed(os.str());
  }
  if (jmin == 0 || jmin == m) {
    std::ostringstream os;
    os << "distance minimum sits on the scan boundary s = " << -half + jmin * ds;
    throw HypothesisFailed(os.str());
  }
  // Other scan minima that are as good as the best one.
  int competing = 0;
  int minima = 0;
  for (int j = 1; j < m; ++j) {
    if (phi[j] <= phi[j - 1] && phi[j] <= phi[j + 1]) {
      ++minima;
      if (std::abs(j - jmin) > 1 && phi[j] <= phi[jmin] * (1.0 + 1e-3) + 1e-12) {
        ++competing;
      }
    }
  }

  // Golden section on the bracketing cells.
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = -half + (jmin - 1) * ds;
  double b = -half + (jmin + 1) * ds;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = shift_distance(v, c, g, p);
  double fd = shift_distance(v, d, g, p);
  while (b - a > 1e-4 * eps) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = shift_distance(v, c, g, p);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = shift_distance(v, d, g, p);
    }
  }
  double s = 0.5 * (a + b);
  // Newton steps on eta' polish the golden-section estimate. Each step must stay
  // inside the final bracket, otherwise the bracket midpoint is kept.
  const double s_bracket = s;
  for (int it = 0; it < 4; ++it) {
    const ShiftDerivatives sd = shift_derivatives(v, s, g, p);
    if (sd.d2 <= 0.0) {
      break;
    }
    const double step = sd.d1 / sd.d2;
    if (std::abs(s - step - s_bracket) > 4.0 * (b - a) + 1e-3 * eps) {
      s = s_bracket;
      break;
    }
    s -= step;
    if (std::abs(step) < 1e-14 * eps) {
      break;
    }
  }

  DecompositionResult r;
  r.s_star = s;
  const ShiftDerivatives fin = shift_derivatives(v, s, g, p);
  r.residual_orthogonality = fin.d1;
  r.min_value = shift_distance(v, s, g, p);
  double vnorm2 = 0.0, qn2 = 0.0;
  {
    const std::vector<double> w = simpson_weights(static_cast<std::size_t>(g.size()), g.dz());
    for (int i = 0; i < g.size(); ++i) {
      const double q1 = Q_eps_jet(g.z(i) - s, p).d1;
      vnorm2 += w[i] * v[i] * v[i];
      qn2 += w[i] * q1 * q1;
    }
  }
  const double scale = std::sqrt(vnorm2 * qn2);
  r.residual_normalized = scale > 0.0 ? std::abs(fin.d1) / scale : std::abs(fin.d1);
  const double probe = 2.0 * eps * opt.delta;
  r.convexity_margin = std::min({fin.d2, shift_derivatives(v, s - probe, g, p).d2,
                                 shift_derivatives(v, s + probe, g, p).d2});
  r.scan_minima = minima;
  const bool convex = r.convexity_margin > 0.0;
  if (competing > 0 && !convex) {
    std::ostringstream os;
    os << competing << " competing minima and no convexity certificate near s = " << s;
    throw NotUnique(os.str());
  }
  r.unique = convex && competing == 0;
  return r;
}

// ---------------------------------------------------------------------------

ShiftField::ShiftField(std::vector<double> y0, int n1)
    : y0_(std::move(y0)), n1_(n1), s_(y0_.size() * static_cast<std::size_t>(n1), 0.0) {
  if (y0_.empty() || n1 < 4) {
    throw ConfigError("shift field needs at least one slice and 4 angles");
  }
}

ShiftField ShiftField::zero(const SliceGrid& g) { return ShiftField(g.y0, g.n1); }

void ShiftField::locate(double y0, double y1, int& s, double& fs, int& k, double& fk) const {
  const int ns = static_cast<int>(y0_.size());
  if (ns == 1 || y0 <= y0_.front()) {
    s = 0;
    fs = 0.0;
  } else if (y0 >= y0_.back()) {
    s = ns - 2;
    fs = 1.0;
  } else {
    s = static_cast<int>(std::upper_bound(y0_.begin(), y0_.end(), y0) - y0_.begin()) - 1;
    s = std::clamp(s, 0, ns - 2);
    fs = (y0 - y0_[s]) / (y0_[s + 1] - y0_[s]);
  }
  const double r = wrap_angle(y1) / kTwoPi * n1_;
  k = static_cast<int>(std::floor(r)) % n1_;
  fk = r - std::floor(r);
}

namespace {

template <class F>
double bilinear(const ShiftField& f, int s, double fs, int k, double fk, F get) {
  const int n1 = f.n1();
  const int k1 = (k + 1) % n1;
  const int s1 = static_cast<int>(f.y0().size()) > 1 ? s + 1 : s;
  const double a = (1.0 - fk) * get(s, k) + fk * get(s, k1);
  const double b = (1.0 - fk) * get(s1, k) + fk * get(s1, k1);
  return (1.0 - fs) * a + fs * b;
}

}  // namespace

double ShiftField::at(double y0, double y1) const {
  int s, k;
  double fs, fk;
  locate(y0, y1, s, fs, k, fk);
  return bilinear(*this, s, fs, k, fk, [this](int a, int b) { return (*this)(a, b); });
}

double ShiftField::d0_at(double y0, double y1) const {
  if (y0_.size() < 3) {
    return 0.0;
  }
  int s, k;
  double fs, fk;
  locate(y0, y1, s, fs, k, fk);
  return bilinear(*this, s, fs, k, fk, [this](int a, int b) { return d0(a, b); });
}

double ShiftField::d1_at(double y0, double y1) const {
  int s, k;
  double fs, fk;
  locate(y0, y1, s, fs, k, fk);
  return bilinear(*this, s, fs, k, fk, [this](int a, int b) { return d1(a, b); });
}

double ShiftField::d0(int slice, int k) const {
  const int ns = static_cast<int>(y0_.size());
  if (ns < 3) {
    throw InsufficientSlices("d/dy0 of s* needs at least 3 slices");
  }
  const auto& f = *this;
  if (slice == 0) {
    return (-3.0 * f(0, k) + 4.0 * f(1, k) - f(2, k)) / (y0_[2] - y0_[0]);
  }
  if (slice == ns - 1) {
    return (3.0 * f(ns - 1, k) - 4.0 * f(ns - 2, k) + f(ns - 3, k)) /
           (y0_[ns - 1] - y0_[ns - 3]);
  }
  return (f(slice + 1, k) - f(slice - 1, k)) / (y0_[slice + 1] - y0_[slice - 1]);
}

double ShiftField::d1(int slice, int k) const {
  const auto& f = *this;
  const int n = n1_;
  const double h = kTwoPi / n;
  auto at = [&](int kk) { return f(slice, ((kk % n) + n) % n); };
  return (-at(k + 2) + 8.0 * at(k + 1) - 8.0 * at(k - 1) + at(k - 2)) / (12.0 * h);
}

double shift_h1_norm_sq(const ShiftField& f, int slice) {
  if (f.y0().size() < 3) {
    throw InsufficientSlices("the s* H1 norm needs s* on at least 3 slices");
  }
  std::vector<double> g(f.n1());
  for (int k = 0; k < f.n1(); ++k) {
    const double s = f(slice, k);
    const double a = f.d0(slice, k);
    const double b = f.d1(slice, k);
    g[k] = s * s + a * a + b * b;
  }
  return periodic_trapezoid(g, kTwoPi);
}

// ---------------------------------------------------------------------------

ComparisonField::ComparisonField(const SurfaceChart& chart, ShiftField shift,
                                 ProfileParams params)
    : chart_(&chart), shift_(std::move(shift)), params_(params) {}

double ComparisonField::V(double y0, double y1, double y2) const {
  return Q_eps(y2 - shift_.at(y0, y1), params_);
}

Vec3 ComparisonField::grad_V(double y0, double y1, double y2) const {
  const double q1 = Q_eps_jet(y2 - shift_.at(y0, y1), params_).d1;
  return Vec3(-q1 * shift_.d0_at(y0, y1), -q1 * shift_.d1_at(y0, y1), q1);
}

FieldSample ComparisonField::sample(double t, double x1, double x2) const {
  const ChartPoint cp = chart_->invert(t, x1, x2);
  FieldSample fs;
  if (!cp.inside_tube) {
    fs.u = chart_->region_sign(t, x1, x2);
    return fs;
  }
  fs.u = V(cp.y0, cp.y1, cp.y2);
  const Mat3 J = chart_->surface().map_and_jacobian(cp.y0, cp.y1, cp.y2).second;
  const Vec3 g = J.transpose().partialPivLu().solve(grad_V(cp.y0, cp.y1, cp.y2));
  fs.u_t = g[0];
  fs.u_x1 = g[1];
  fs.u_x2 = g[2];
  return fs;
}

Array2 ComparisonField::sample_grid(double t, const GridSpec& grid) const {
  const int nx = grid.nx();
  const int ny = grid.ny();
  const GridClassification cls = classify_grid(*chart_, t, grid.x1(0), grid.x2(0), grid.h, nx, ny);
  Array2 u(nx, ny);
#pragma omp parallel for schedule(static)
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const std::size_t k = cls.index(i, j);
      const ChartPoint& cp = cls.points[k];
      u(i, j) = cp.inside_tube ? V(cp.y0, cp.y1, cp.y2) : cls.sign[k];
    }
  }
  return u;
}

void emit_comparison_levels(const ComparisonField& U, const GridSpec& spec,
                            const std::vector<LevelObserver>& observers, int stride) {
  stride = std::max(1, stride);
  const long n_fwd = static_cast<long>(std::ceil((spec.t_end - spec.t_start) / spec.dt - 1e-9));
  const long n_bwd =
      static_cast<long>(std::ceil((spec.t_start - spec.backward_end()) / spec.dt - 1e-9));
  auto level = [&](long n) { return U.sample_grid(spec.t_start + n * spec.dt, spec); };
  auto emit = [&](long n, double dt, const Array2& prev, const Array2& curr, const Array2& next) {
    LevelView lv{spec.t_start + n * spec.dt, n, dt, prev, curr, next, spec};
    for (const auto& ob : observers) {
      ob(lv);
    }
  };
  for (int dir : {1, -1}) {
    const long n_end = dir > 0 ? n_fwd : n_bwd;
    const long n_first = dir > 0 ? 0 : 1;
    if (n_end < n_first) {
      continue;
    }
    if (stride > 1) {
      // Only every stride-th level is wanted: build its neighbours on demand.
      for (long m = n_first; m <= n_end; ++m) {
        if (m % stride != 0) {
          continue;
        }
        emit(dir * m, dir * spec.dt, level(dir * (m - 1)), level(dir * m), level(dir * (m + 1)));
      }
      continue;
    }
    Array2 prev = level(dir * (n_first - 1));
    Array2 curr = level(dir * n_first);
    for (long m = n_first; m <= n_end; ++m) {
      Array2 next = level(dir * (m + 1));
      emit(dir * m, dir * spec.dt, prev, curr, next);
      prev = std::move(curr);
      curr = std::move(next);
    }
  }
}

TubeComparison tube_comparison(const PullbackSlice& s, const SurfaceChart& chart,
                               const ComparisonField& U) {
  const int nz = s.fiber.size();
  const std::vector<double> w = simpson_weights(static_cast<std::size_t>(nz), s.fiber.dz());
  std::vector<TubeComparison> per(s.n1);
#pragma omp parallel for schedule(static)
  for (int k = 0; k < s.n1; ++k) {
    const double y1 = kTwoPi * k / s.n1;
    const SurfaceFrame f = chart.surface().frame(s.y0, y1);
    TubeComparison tc;
    for (int i = 0; i < nz; ++i) {
      const double z = s.fiber.z(i);
      Mat3 J;
      J.col(0) = f.t0 + z * f.dnu0;
      J.col(1) = f.t1 + z * f.dnu1;
      J.col(2) = f.nu;
      const Vec3 DU = J.transpose().partialPivLu().solve(U.grad_V(s.y0, y1, z));
      const Vec3 Du(s.u_t(i, k), s.u_x1(i, k), s.u_x2(i, k));
      const double diff = s.v(i, k) - U.V(s.y0, y1, z);
      const double wt = w[i] * s.det(i, k);
      tc.difference.l2 += wt * diff * diff;
      tc.difference.grad += wt * (Du - DU).squaredNorm();
      tc.grad_U_sq += wt * DU.squaredNorm();
    }
    per[k] = tc;
  }
  TubeComparison out;
  const double dy1 = kTwoPi / s.n1;
  for (const auto& tc : per) {
    out.difference.l2 += dy1 * tc.difference.l2;
    out.difference.grad += dy1 * tc.difference.grad;
    out.grad_U_sq += dy1 * tc.grad_U_sq;
  }
  return out;
}

void write_shift_csv(const std::filesystem::path& path, const ShiftField& f,
                     const std::vector<SliceDiagnostics>& diag) {
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot open s* table for writing: " + path.string());
  }
  out << "y0,y1,s_star,residual\n";
  out.precision(12);
  for (std::size_t s = 0; s < f.y0().size(); ++s) {
    for (int k = 0; k < f.n1(); ++k) {
      const double res = s < diag.size() && static_cast<std::size_t>(k) < diag[s].residual.size()
                             ? diag[s].residual[k]
                             : 0.0;
      out << f.y0()[s] << ',' << kTwoPi * k / f.n1() << ',' << f(static_cast<int>(s), k) << ','
          << res << '\n';
    }
  }
  if (!out) {
    throw IoError("failed writing s* table: " + path.string());
  }
}

}  // namespace iface
