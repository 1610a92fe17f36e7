#include "iface/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss.hpp>

#include "iface/errors.hpp"
#include "iface/log.hpp"
#include "iface/quadrature.hpp"

namespace iface {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

Vec3 cross(const Vec3& a, const Vec3& b) { return a.cross(b); }

Vec3 eta(const Vec3& v) { return Vec3(-v[0], v[1], v[2]); }
}  // namespace

double wrap_angle(double y1) {
  double r = std::fmod(y1, kTwoPi);
  if (r < 0.0) {
    r += kTwoPi;
  }
  return r;
}

FourierCurve::Jet FourierCurve::jet(double s) const {
  Jet j;
  const double cs = std::cos(s);
  const double sn = std::sin(s);
  double ck = 1.0;  // cos(k s)
  double sk = 0.0;  // sin(k s)
  for (std::size_t k = 0; k < cos_coeffs.size(); ++k) {
    const double kk = static_cast<double>(k);
    const Vec2& c = cos_coeffs[k];
    const Vec2& sv = sin_coeffs[k];
    j.d0 += c * ck + sv * sk;
    j.d1 += kk * (-c * sk + sv * ck);
    j.d2 -= kk * kk * (c * ck + sv * sk);
    const double next_c = ck * cs - sk * sn;
    sk = sk * cs + ck * sn;
    ck = next_c;
  }
  return j;
}

LoopPair LoopPair::collapsing_circle() {
  LoopPair lp;
  lp.a.cos_coeffs = {Vec2(0, 0), Vec2(1, 0)};
  lp.a.sin_coeffs = {Vec2(0, 0), Vec2(0, 1)};
  lp.b.cos_coeffs = {Vec2(0, 0), Vec2(1, 0)};
  lp.b.sin_coeffs = {Vec2(0, 0), Vec2(0, -1)};
  return lp;
}

LoopPair LoopPair::degenerate_circle() {
  LoopPair lp;
  lp.a.cos_coeffs = {Vec2(0, 0), Vec2(1, 0)};
  lp.a.sin_coeffs = {Vec2(0, 0), Vec2(0, 1)};
  lp.b = lp.a;
  return lp;
}

ValidationReport validate_loop(const LoopPair& loop, double tol, int samples) {
  if (loop.a.cos_coeffs.empty() || loop.b.cos_coeffs.empty() ||
      loop.a.cos_coeffs.size() != loop.a.sin_coeffs.size() ||
      loop.b.cos_coeffs.size() != loop.b.sin_coeffs.size()) {
    throw ConfigError("validate_loop: coefficient lists must be nonempty and paired");
  }
  ValidationReport r;
  r.tol = tol;
  for (int i = 0; i < samples; ++i) {
    const double s = kTwoPi * i / samples;
    r.max_deviation_a = std::max(r.max_deviation_a, std::abs(loop.a.jet(s).d1.norm() - 1.0));
    r.max_deviation_b = std::max(r.max_deviation_b, std::abs(loop.b.jet(s).d1.norm() - 1.0));
  }
  r.passed = r.max_deviation_a < tol && r.max_deviation_b < tol;
  return r;
}

FourierCurve unit_speed_fourier(const std::function<Vec2(double)>& curve, int n_modes,
                                int samples) {
  // Fourth order differences; the step balances truncation against rounding.
  const double step = 1e-3;
  auto speed = [&](double s) {
    const Vec2 d = (8.0 * (curve(s + step) - curve(s - step)) -
                    (curve(s + 2 * step) - curve(s - 2 * step))) /
                   (12.0 * step);
    return d.norm();
  };
  // Table intervals are short, so a fixed Gauss rule is accurate and,
  // unlike adaptive refinement, not derailed by differencing noise.
  auto arc = [&](double a, double b) {
    return boost::math::quadrature::gauss<double, 20>::integrate(speed, a, b);
  };
  // Cumulative arc length on a parameter table.
  const int table = samples;
  std::vector<double> sigma(table + 1, 0.0);
  for (int j = 0; j < table; ++j) {
    const double s0 = kTwoPi * j / table;
    const double s1 = kTwoPi * (j + 1) / table;
    sigma[j + 1] = sigma[j] + arc(s0, s1);
  }
  const double length = sigma[table];
  const double scale = kTwoPi / length;

  std::vector<Vec2> pts(samples);
  for (int k = 0; k < samples; ++k) {
    const double target = length * k / samples;
    auto it = std::upper_bound(sigma.begin(), sigma.end(), target);
    int j = std::clamp(static_cast<int>(it - sigma.begin()) - 1, 0, table - 1);
    const double sj = kTwoPi * j / table;
    double s = sj + (target - sigma[j]) / speed(sj);
    for (int iter = 0; iter < 8; ++iter) {
      const double f = sigma[j] + arc(sj, s) - target;
      const double ds = f / speed(s);
      s -= ds;
      if (std::abs(ds) < 1e-15) {
        break;
      }
    }
    pts[k] = curve(s) * scale;
  }

  FourierCurve fc;
  fc.cos_coeffs.assign(n_modes + 1, Vec2::Zero());
  fc.sin_coeffs.assign(n_modes + 1, Vec2::Zero());
  for (int k = 0; k <= n_modes; ++k) {
    Vec2 c = Vec2::Zero();
    Vec2 s = Vec2::Zero();
    for (int j = 0; j < samples; ++j) {
      const double th = kTwoPi * j / samples;
      c += pts[j] * std::cos(k * th);
      s += pts[j] * std::sin(k * th);
    }
    const double norm = (k == 0 ? 1.0 : 2.0) / samples;
    fc.cos_coeffs[k] = c * norm;
    fc.sin_coeffs[k] = k == 0 ? Vec2::Zero() : Vec2(s * norm);
  }
  return fc;
}

Surface::Surface(LoopPair loop) : loop_(std::move(loop)) {
  const auto poly = slice_polygon(0.0, 512);
  double area = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % poly.size()];
    area += p.x() * q.y() - q.x() * p.y();
  }
  orientation_ = area < 0.0 ? -1.0 : 1.0;
}

Vec3 Surface::point(double y0, double y1) const {
  const Vec2 x = 0.5 * (loop_.a.value(y0 + y1) + loop_.b.value(y0 - y1));
  return Vec3(y0, x.x(), x.y());
}

SurfaceFrame Surface::frame(double y0, double y1) const {
  const FourierCurve::Jet A = loop_.a.jet(y0 + y1);
  const FourierCurve::Jet B = loop_.b.jet(y0 - y1);
  SurfaceFrame f;
  const Vec2 x = 0.5 * (A.d0 + B.d0);
  const Vec2 v0 = 0.5 * (A.d1 + B.d1);
  const Vec2 v1 = 0.5 * (A.d1 - B.d1);
  const Vec2 w00 = 0.5 * (A.d2 + B.d2);
  const Vec2 w01 = 0.5 * (A.d2 - B.d2);
  f.psi = Vec3(y0, x.x(), x.y());
  f.t0 = Vec3(1.0, v0.x(), v0.y());
  f.t1 = Vec3(0.0, v1.x(), v1.y());
  const Vec3 d0t0(0.0, w00.x(), w00.y());
  const Vec3 d1t0(0.0, w01.x(), w01.y());
  const Vec3& d0t1 = d1t0;
  const Vec3& d1t1 = d0t0;

  const Vec3 n = eta(cross(f.t0, f.t1));
  const double nn = minkowski(n, n);
  const double scale = f.t0.squaredNorm() * f.t1.squaredNorm();
  if (!(nn > 1e-14 * std::max(scale, 1.0)) || f.t1.squaredNorm() < 1e-28) {
    std::ostringstream os;
    os << "degenerate tangents at (y0, y1) = (" << y0 << ", " << y1 << ")";
    throw DegenerateTangents(os.str());
  }
  const Vec2 inward = orientation_ * Vec2(-f.t1[2], f.t1[1]);
  const double side = n[1] * inward.x() + n[2] * inward.y();
  const double sgn = side < 0.0 ? -1.0 : 1.0;
  const double root = std::sqrt(nn);
  f.nu = sgn * n / root;

  const Vec3 dn0 = eta(cross(d0t0, f.t1) + cross(f.t0, d0t1));
  const Vec3 dn1 = eta(cross(d1t0, f.t1) + cross(f.t0, d1t1));
  const double r3 = nn * root;
  f.dnu0 = sgn * (dn0 / root - n * (minkowski(n, dn0) / r3));
  f.dnu1 = sgn * (dn1 / root - n * (minkowski(n, dn1) / r3));
  return f;
}

Vec3 Surface::normal(double y0, double y1) const { return frame(y0, y1).nu; }

Vec3 Surface::chart_map(double y0, double y1, double y2) const {
  const SurfaceFrame f = frame(y0, y1);
  return f.psi + y2 * f.nu;
}

std::pair<Vec3, Mat3> Surface::map_and_jacobian(double y0, double y1, double y2) const {
  const SurfaceFrame f = frame(y0, y1);
  Mat3 J;
  J.col(0) = f.t0 + y2 * f.dnu0;
  J.col(1) = f.t1 + y2 * f.dnu1;
  J.col(2) = f.nu;
  return {f.psi + y2 * f.nu, J};
}

ChartJacobian Surface::jacobian(double y0, double y1, double y2, double det_floor) const {
  ChartJacobian cj;
  try {
    cj.matrix = map_and_jacobian(y0, y1, y2).second;
  } catch (const DegenerateTangents& e) {
    throw SingularChart(std::string("chart Jacobian: ") + e.what());
  }
  cj.det = cj.matrix.determinant();
  if (std::abs(cj.det) < det_floor) {
    std::ostringstream os;
    os << "|det DPsi| = " << std::abs(cj.det) << " below floor " << det_floor << " at ("
       << y0 << ", " << y1 << ", " << y2 << "); shrink rho";
    throw SingularChart(os.str());
  }
  return cj;
}

std::vector<Vec2> Surface::slice_polygon(double t, int n) const {
  std::vector<Vec2> poly(n);
  for (int k = 0; k < n; ++k) {
    const double y1 = kTwoPi * k / n;
    poly[k] = 0.5 * (loop_.a.value(t + y1) + loop_.b.value(t - y1));
  }
  return poly;
}

bool polygon_contains(const std::vector<Vec2>& poly, const Vec2& x) {
  bool inside = false;
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[j];
    if ((a.y() > x.y()) != (b.y() > x.y())) {
      const double xc = a.x() + (x.y() - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
      if (x.x() < xc) {
        inside = !inside;
      }
    }
  }
  return inside;
}

// ---------------------------------------------------------------------------

SurfaceChart::SurfaceChart(Surface surface, ChartDomain domain, ChartOptions options)
    : surface_(std::move(surface)), domain_(domain), options_(options) {
  if (!(domain_.y0_max > domain_.y0_min) || !(domain_.rho > 0.0)) {
    throw ConfigError("chart domain must have y0_max > y0_min and rho > 0");
  }
  const ValidationReport vr = validate_loop(surface_.loop(), 1e-6);
  if (!vr.passed) {
    std::ostringstream os;
    os << "string data is not unit speed: max deviation a " << vr.max_deviation_a
       << ", b " << vr.max_deviation_b;
    throw NonUnitSpeed(os.str());
  }
  double min_det = 0.0;
  int shrinks = 0;
  while (!validate_det(domain_.rho, &min_det)) {
    if (!options_.auto_shrink || shrinks >= options_.max_shrinks) {
      std::ostringstream os;
      os << "Psi is not a diffeomorphism on the tube: min |det| = " << min_det
         << " with rho = " << domain_.rho;
      throw SingularChart(os.str());
    }
    domain_.rho *= options_.shrink_factor;
    ++shrinks;
  }
  if (shrinks > 0) {
    std::ostringstream os;
    os << "tube half-width shrunk to rho = " << domain_.rho << " to keep Psi invertible";
    log_warning(os.str());
  }
  min_abs_det_ = min_det;
  build_seed_table();
}

bool SurfaceChart::validate_det(double rho, double* min_det) const {
  const int n0 = 41;
  const int n1 = 128;
  const int n2 = 17;
  double lo = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n0; ++i) {
    const double y0 = domain_.y0_min + (domain_.y0_max - domain_.y0_min) * i / (n0 - 1);
    for (int j = 0; j < n1; ++j) {
      const double y1 = kTwoPi * j / n1;
      SurfaceFrame f;
      try {
        f = surface_.frame(y0, y1);
      } catch (const DegenerateTangents& e) {
        // Shrinking rho cannot repair a singular surface.
        throw SingularChart(std::string("surface is not immersed: ") + e.what());
      }
      // det is a polynomial in y2, so a fold between samples shows up as a
      // sign change relative to the surface itself.
      Mat3 J0;
      J0.col(0) = f.t0;
      J0.col(1) = f.t1;
      J0.col(2) = f.nu;
      const double sign0 = J0.determinant() < 0.0 ? -1.0 : 1.0;
      for (int k = 0; k < n2; ++k) {
        const double y2 = 2.0 * rho * (1.0 - 1e-9) * (2.0 * k / (n2 - 1) - 1.0);
        Mat3 J;
        J.col(0) = f.t0 + y2 * f.dnu0;
        J.col(1) = f.t1 + y2 * f.dnu1;
        J.col(2) = f.nu;
        const double det = J.determinant();
        lo = std::min(lo, det * sign0 > 0.0 ? std::abs(det) : 0.0);
      }
    }
  }
  *min_det = lo;
  return lo > options_.det_floor;
}

bool SurfaceChart::in_domain(double y0, double y2) const {
  return y0 >= domain_.y0_min && y0 <= domain_.y0_max && std::abs(y2) < 2.0 * domain_.rho;
}

Vec3 SurfaceChart::map(double y0, double y1, double y2) const {
  if (!(std::abs(y2) < 2.0 * domain_.rho)) {
    std::ostringstream os;
    os << "y2 = " << y2 << " outside the tube (|y2| < " << 2.0 * domain_.rho << ")";
    throw OutOfTube(os.str());
  }
  return surface_.chart_map(y0, y1, y2);
}

void SurfaceChart::build_seed_table() {
  const double sp = options_.table_spacing;
  const double rho = domain_.rho;
  // Column norms bound the physical spacing of the table.
  double c0 = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  for (int i = 0; i < 9; ++i) {
    const double y0 = domain_.y0_min + (domain_.y0_max - domain_.y0_min) * i / 8.0;
    for (int j = 0; j < 64; ++j) {
      const double y1 = kTwoPi * j / 64;
      for (double y2 : {-2.0 * rho, 0.0, 2.0 * rho}) {
        const Mat3 J = surface_.map_and_jacobian(y0, y1, y2).second;
        c0 = std::max(c0, J.col(0).norm());
        c1 = std::max(c1, J.col(1).norm());
        c2 = std::max(c2, J.col(2).norm());
      }
    }
  }
  const int n0 = static_cast<int>(std::ceil((domain_.y0_max - domain_.y0_min) * c0 / sp)) + 1;
  const int n1 = static_cast<int>(std::ceil(kTwoPi * c1 / sp));
  const int n2 = static_cast<int>(std::ceil(4.0 * rho * c2 / sp)) + 1;
  seeds_.clear();
  seeds_.reserve(static_cast<std::size_t>(n0) * n1 * n2);
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (int i = 0; i < n0; ++i) {
    const double y0 = domain_.y0_min + (domain_.y0_max - domain_.y0_min) * i / (n0 - 1);
    for (int j = 0; j < n1; ++j) {
      const double y1 = kTwoPi * j / n1;
      const SurfaceFrame f = surface_.frame(y0, y1);
      for (int k = 0; k < n2; ++k) {
        const double y2 = 2.0 * rho * (2.0 * k / (n2 - 1) - 1.0);
        const Vec3 p = f.psi + y2 * f.nu;
        seeds_.push_back({Vec3(y0, y1, y2), p});
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
      }
    }
  }
  cell_ = 2.0 * sp;
  box_lo_ = lo - Vec3::Constant(cell_);
  const Vec3 extent = hi + Vec3::Constant(cell_) - box_lo_;
  for (int d = 0; d < 3; ++d) {
    nb_[d] = static_cast<int>(std::ceil(extent[d] / cell_)) + 1;
  }
  const std::size_t nbuckets = static_cast<std::size_t>(nb_[0]) * nb_[1] * nb_[2];
  buckets_.assign(nbuckets, {});
  auto flat = [&](int a, int b, int c) {
    return (static_cast<std::size_t>(c) * nb_[1] + b) * nb_[0] + a;
  };
  for (std::size_t s = 0; s < seeds_.size(); ++s) {
    const Vec3 r = (seeds_[s].p - box_lo_) / cell_;
    buckets_[flat(static_cast<int>(r[0]), static_cast<int>(r[1]), static_cast<int>(r[2]))]
        .push_back(static_cast<int>(s));
  }
  near_.assign(nbuckets, 0);
  for (int c = 0; c < nb_[2]; ++c) {
    for (int b = 0; b < nb_[1]; ++b) {
      for (int a = 0; a < nb_[0]; ++a) {
        if (buckets_[flat(a, b, c)].empty()) {
          continue;
        }
        for (int dc = -1; dc <= 1; ++dc) {
          for (int db = -1; db <= 1; ++db) {
            for (int da = -1; da <= 1; ++da) {
              const int aa = a + da;
              const int bb = b + db;
              const int cc = c + dc;
              if (aa >= 0 && bb >= 0 && cc >= 0 && aa < nb_[0] && bb < nb_[1] && cc < nb_[2]) {
                near_[flat(aa, bb, cc)] = 1;
              }
            }
          }
        }
      }
    }
  }
}

bool SurfaceChart::bucket_index(const Vec3& x, int idx[3]) const {
  const Vec3 r = (x - box_lo_) / cell_;
  for (int d = 0; d < 3; ++d) {
    if (!(r[d] >= 0.0) || r[d] >= nb_[d]) {
      return false;
    }
    idx[d] = static_cast<int>(r[d]);
  }
  return true;
}

bool SurfaceChart::maybe_in_tube(double t, double x1, double x2) const {
  int idx[3];
  if (!bucket_index(Vec3(t, x1, x2), idx)) {
    return false;
  }
  return near_[(static_cast<std::size_t>(idx[2]) * nb_[1] + idx[1]) * nb_[0] + idx[0]] != 0;
}

ChartPoint SurfaceChart::newton(const Vec3& target, Vec3 y) const {
  ChartPoint out;
  double res = std::numeric_limits<double>::infinity();
  for (int it = 0; it < options_.newton_max_iter; ++it) {
    const auto [p, J] = surface_.map_and_jacobian(y[0], y[1], y[2]);
    const Vec3 F = p - target;
    res = F.norm();
    if (res < 1e-14) {
      break;
    }
    Vec3 dy = J.partialPivLu().solve(F);
    const double len = dy.norm();
    if (!std::isfinite(len)) {
      break;
    }
    if (len > 0.25) {
      dy *= 0.25 / len;
    }
    y -= dy;
    if (len < 1e-15) {
      res = (surface_.chart_map(y[0], y[1], y[2]) - target).norm();
      break;
    }
  }
  out.residual = res;
  out.y0 = y[0];
  out.y1 = wrap_angle(y[1]);
  out.y2 = y[2];
  if (!(res < 1e-10)) {
    out.status = InversionStatus::diverged;
    return out;
  }
  out.inside_tube = in_domain(y[0], y[2]);
  out.status = out.inside_tube ? InversionStatus::inside : InversionStatus::outside;
  return out;
}

ChartPoint SurfaceChart::invert(double t, double x1, double x2) const {
  const Vec3 target(t, x1, x2);
  int idx[3];
  if (!bucket_index(target, idx)) {
    return {};
  }
  auto flat = [&](int a, int b, int c) {
    return (static_cast<std::size_t>(c) * nb_[1] + b) * nb_[0] + a;
  };
  if (!near_[flat(idx[0], idx[1], idx[2])]) {
    return {};
  }
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (int dc = -1; dc <= 1; ++dc) {
    for (int db = -1; db <= 1; ++db) {
      for (int da = -1; da <= 1; ++da) {
        const int a = idx[0] + da;
        const int b = idx[1] + db;
        const int c = idx[2] + dc;
        if (a < 0 || b < 0 || c < 0 || a >= nb_[0] || b >= nb_[1] || c >= nb_[2]) {
          continue;
        }
        for (int s : buckets_[flat(a, b, c)]) {
          const double d = (seeds_[s].p - target).squaredNorm();
          if (d < best_d) {
            best_d = d;
            best = s;
          }
        }
      }
    }
  }
  if (best < 0) {
    return {};
  }
  return newton(target, seeds_[best].y);
}

ChartPoint SurfaceChart::invert_from(double t, double x1, double x2,
                                     const ChartPoint& guess) const {
  const Vec3 target(t, x1, x2);
  const Vec3 y(guess.y0, guess.y1, guess.y2);
  const double gap = (surface_.chart_map(y[0], y[1], y[2]) - target).norm();
  if (gap < 4.0 * options_.table_spacing) {
    ChartPoint cp = newton(target, y);
    if (cp.status != InversionStatus::diverged) {
      return cp;
    }
  }
  return invert(t, x1, x2);
}

int SurfaceChart::region_sign(double t, double x1, double x2) const {
  const ChartPoint cp = invert(t, x1, x2);
  if (cp.inside_tube) {
    return cp.y2 > 0.0 ? 1 : -1;
  }
  return polygon_contains(surface_.slice_polygon(t, 1024), Vec2(x1, x2)) ? 1 : -1;
}

std::pair<Vec3, Vec3> SurfaceChart::bounding_box(double y0_lo, double y0_hi, double y2_abs,
                                                 int n1, int n2) const {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  const int n0 = std::max(2, static_cast<int>(std::ceil((y0_hi - y0_lo) / 0.01)) + 1);
  for (int i = 0; i < n0; ++i) {
    const double y0 = y0_lo + (y0_hi - y0_lo) * i / (n0 - 1);
    for (int j = 0; j < n1; ++j) {
      const SurfaceFrame f = surface_.frame(y0, kTwoPi * j / n1);
      for (int k = 0; k < n2; ++k) {
        const double y2 = y2_abs * (2.0 * k / (n2 - 1) - 1.0);
        const Vec3 p = f.psi + y2 * f.nu;
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
      }
    }
  }
  return {lo, hi};
}

void SurfaceChart::export_csv(const std::filesystem::path& path, int n0, int n1) const {
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot open chart table for writing: " + path.string());
  }
  out << "y0,y1,psi0,psi1,psi2,nu0,nu1,nu2,detDPsi\n";
  out.precision(12);
  for (int i = 0; i < n0; ++i) {
    const double y0 =
        domain_.y0_min + (domain_.y0_max - domain_.y0_min) * i / std::max(1, n0 - 1);
    for (int j = 0; j < n1; ++j) {
      const double y1 = kTwoPi * j / n1;
      const SurfaceFrame f = surface_.frame(y0, y1);
      Mat3 J;
      J.col(0) = f.t0;
      J.col(1) = f.t1;
      J.col(2) = f.nu;
      out << y0 << ',' << y1 << ',' << f.psi[0] << ',' << f.psi[1] << ',' << f.psi[2] << ','
          << f.nu[0] << ',' << f.nu[1] << ',' << f.nu[2] << ',' << J.determinant() << '\n';
    }
  }
  if (!out) {
    throw IoError("failed writing chart table: " + path.string());
  }
}

void polygon_row_inside(const std::vector<Vec2>& poly, double y, double x0, double dx, int n,
                        std::vector<char>& inside) {
  std::vector<double> cross;
  const std::size_t m = poly.size();
  for (std::size_t i = 0, j = m - 1; i < m; j = i++) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[j];
    if ((a.y() > y) != (b.y() > y)) {
      cross.push_back(a.x() + (y - a.y()) * (b.x() - a.x()) / (b.y() - a.y()));
    }
  }
  std::sort(cross.begin(), cross.end());
  inside.assign(n, 0);
  // A node is inside when an odd number of crossings lie strictly to its right.
  std::size_t k = 0;
  for (int i = 0; i < n; ++i) {
    const double x = x0 + i * dx;
    while (k < cross.size() && cross[k] <= x) {
      ++k;
    }
    inside[i] = static_cast<char>((cross.size() - k) % 2);
  }
}

GridClassification classify_grid(const SurfaceChart& chart, double t, double x0, double y0,
                                 double h, int nx, int ny) {
  GridClassification g;
  g.nx = nx;
  g.ny = ny;
  g.sign.assign(static_cast<std::size_t>(nx) * ny, -1);
  g.points.assign(static_cast<std::size_t>(nx) * ny, ChartPoint{});
  const auto poly = chart.surface().slice_polygon(t, 2048);
#pragma omp parallel for schedule(dynamic, 8)
  for (int j = 0; j < ny; ++j) {
    std::vector<char> inside;
    const double y = y0 + j * h;
    polygon_row_inside(poly, y, x0, h, nx, inside);
    ChartPoint prev;
    bool have_prev = false;
    for (int i = 0; i < nx; ++i) {
      const std::size_t k = g.index(i, j);
      g.sign[k] = inside[i] ? 1 : -1;
      const double x = x0 + i * h;
      if (!chart.maybe_in_tube(t, x, y)) {
        have_prev = false;
        continue;
      }
      const ChartPoint cp = have_prev ? chart.invert_from(t, x, y, prev) : chart.invert(t, x, y);
      have_prev = cp.status != InversionStatus::diverged;
      if (have_prev) {
        prev = cp;
      }
      if (cp.inside_tube) {
        g.points[k] = cp;
        g.sign[k] = cp.y2 > 0.0 ? 1 : -1;
      }
    }
  }
  return g;
}

}  // namespace iface
