#include "iface/odelab.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/math/tools/roots.hpp>

#include "iface/diagnostics.hpp"
#include "iface/errors.hpp"
#include "iface/interpolation.hpp"
#include "iface/quadrature.hpp"

namespace iface {

namespace {

FiberGrid as_fiber(const OdeLine& line) {
  const int n = line.size();
  return FiberGrid{0.5 * (n - 1) * line.dz, n - 1};
}

// Integral of f over [z_i, z_{i+1}] from four neighbouring samples.
template <class F>
double interval_integral(F f, int i, int n, double dz) {
  if (i == 0) {
    return dz / 24.0 * (9.0 * f(0) + 19.0 * f(1) - 5.0 * f(2) + f(3));
  }
  if (i == n - 2) {
    return dz / 24.0 * (f(n - 4) - 5.0 * f(n - 3) + 19.0 * f(n - 2) + 9.0 * f(n - 1));
  }
  return dz / 24.0 * (-f(i - 1) + 13.0 * f(i) + 13.0 * f(i + 1) - f(i + 2));
}

// Cumulative integral of g from the zero node, oriented (negative to the left).
std::vector<double> cumulative_from_zero(std::span<const double> g, const OdeLine& line) {
  const int n = line.size();
  const int i0 = line.zero_index();
  std::vector<double> G(n, 0.0);
  auto f = [&](int k) { return g[k]; };
  for (int i = i0; i < n - 1; ++i) {
    G[i + 1] = G[i] + interval_integral(f, i, n, line.dz);
  }
  for (int i = i0; i > 0; --i) {
    G[i - 1] = G[i] - interval_integral(f, i - 1, n, line.dz);
  }
  return G;
}

void check_line_size(std::span<const double> w, const OdeLine& line, const char* what) {
  if (static_cast<int>(w.size()) != line.size()) {
    throw Error(std::string(what) + ": samples do not match the line grid");
  }
}

}  // namespace

int OdeLine::size() const {
  if (!(Z > 0.0) || !(dz > 0.0) || Z / dz < 4.0) {
    throw ConfigError("ODE line needs Z > 0 and at least 4 cells per half line");
  }
  return 2 * static_cast<int>(std::lround(Z / dz)) + 1;
}

std::vector<double> OdeLine::points() const {
  std::vector<double> p(size());
  for (int i = 0; i < size(); ++i) {
    p[i] = z(i);
  }
  return p;
}

std::vector<double> line_derivative(std::span<const double> w, const OdeLine& line) {
  check_line_size(w, line, "line_derivative");
  return fiber_derivative(w, as_fiber(line));
}

double line_l2(std::span<const double> w, const OdeLine& line) {
  check_line_size(w, line, "line_l2");
  std::vector<double> f(w.size());
  std::transform(w.begin(), w.end(), f.begin(), [](double x) { return x * x; });
  return std::sqrt(std::max(0.0, simpson(f, line.dz)));
}

double line_h1(std::span<const double> w, const OdeLine& line) {
  const std::vector<double> d = line_derivative(w, line);
  std::vector<double> f(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    f[i] = w[i] * w[i] + d[i] * d[i];
  }
  return std::sqrt(std::max(0.0, simpson(f, line.dz)));
}

double line_linf(std::span<const double> w) {
  double m = 0.0;
  for (double x : w) {
    m = std::max(m, std::abs(x));
  }
  return m;
}

SobolevCheck sobolev_check(std::span<const double> w, const OdeLine& line) {
  SobolevCheck c;
  const double inf = line_linf(w);
  const double h1 = line_h1(w, line);
  c.linf_sq = inf * inf;
  c.h1_sq = h1 * h1;
  c.holds = c.linf_sq <= 0.5 * c.h1_sq * (1.0 + 1e-9) + 1e-300;
  return c;
}

std::vector<double> compute_h(std::span<const double> v, const FiberGrid& g, double epsilon) {
  const std::vector<double> dv = fiber_derivative(v, g);
  std::vector<double> h(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    h[i] = dv[i] - (1.0 - v[i] * v[i]) / epsilon;
  }
  return h;
}

namespace {

// Cubic Lagrange interpolant of fiber samples; zero outside I.
double fiber_interp(std::span<const double> v, const FiberGrid& g, double z) {
  const int n = g.size();
  const double r = (z + g.rho) / g.dz();
  if (r < 0.0 || r > n - 1) {
    return 0.0;
  }
  const int b = std::clamp(static_cast<int>(std::floor(r)), 1, n - 3);
  const LagrangeStencil<4> st = lagrange_stencil<4>(r - b, -1);
  double s = 0.0;
  for (int k = 0; k < 4; ++k) {
    s += st.w[k] * v[b - 1 + k];
  }
  return s;
}

}  // namespace

double find_zero(std::span<const double> v, const FiberGrid& g) {
  if (static_cast<int>(v.size()) != g.size()) {
    throw Error("find_zero: samples do not match the fiber grid");
  }
  const double half = 0.5 * g.rho;
  int best = -1;
  for (int i = 0; i + 1 < g.size(); ++i) {
    const double a = g.z(i);
    const double b = g.z(i + 1);
    if (b < -half || a > half) {
      continue;
    }
    if (v[i] == 0.0 || v[i] * v[i + 1] < 0.0) {
      const double mid = std::abs(0.5 * (a + b));
      if (best < 0 || mid < std::abs(0.5 * (g.z(best) + g.z(best + 1)))) {
        best = i;
      }
    }
  }
  if (best < 0) {
    throw NoZeroCrossing("fiber has no sign change in [-rho/2, rho/2]");
  }
  if (v[best] == 0.0) {
    return g.z(best);
  }
  auto f = [&](double z) { return fiber_interp(v, g, z); };
  boost::uintmax_t iters = 100;
  const auto r = boost::math::tools::toms748_solve(
      f, g.z(best), g.z(best + 1), v[best], v[best + 1],
      boost::math::tools::eps_tolerance<double>(50), iters);
  return 0.5 * (r.first + r.second);
}

RescaledProfile rescale(const std::function<double(double)>& w_eps,
                        const std::function<double(double)>& h_eps, double epsilon, double s0,
                        const OdeLine& line) {
  RescaledProfile p;
  const int n = line.size();
  p.w.resize(n);
  p.h.resize(n);
  for (int i = 0; i < n; ++i) {
    const double x = s0 + epsilon * line.z(i);
    p.w[i] = w_eps(x);
    p.h[i] = epsilon * h_eps(x);
  }
  return p;
}

RescaledProfile rescale_fiber(std::span<const double> v, const FiberGrid& g, double epsilon,
                              double s0, const OdeLine& line) {
  std::vector<double> w(v.size());
  for (int i = 0; i < g.size(); ++i) {
    w[i] = v[i] - q_eps(g.z(i) - s0, epsilon);
  }
  const std::vector<double> h = compute_h(v, g, epsilon);
  return rescale([&](double x) { return fiber_interp(w, g, x); },
                 [&](double x) { return fiber_interp(h, g, x); }, epsilon, s0, line);
}

std::vector<double> apply_S(std::span<const double> w0, std::span<const double> h,
                            const OdeLine& line, double w0_bound) {
  check_line_size(w0, line, "apply_S");
  check_line_size(h, line, "apply_S");
  const double norm = line_h1(w0, line);
  if (norm > w0_bound) {
    std::ostringstream os;
    os << "||w0||_H1 = " << norm << " exceeds " << w0_bound;
    throw HypothesisViolated(os.str());
  }
  const int n = line.size();
  const int i0 = line.zero_index();
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) {
    g[i] = 2.0 * q(line.z(i)) + w0[i];
  }
  const std::vector<double> Phi = cumulative_from_zero(g, line);

  // w1(b) = exp(Phi(a) - Phi(b)) w1(a) + int_a^b exp(Phi(t) - Phi(b)) h(t) dt
  // keeps every exponent bounded, so nothing overflows on long lines.
  std::vector<double> w1(n, 0.0);
  for (int i = i0; i < n - 1; ++i) {
    const double ref = Phi[i + 1];
    auto f = [&](int k) { return std::exp(Phi[k] - ref) * h[k]; };
    w1[i + 1] = std::exp(Phi[i] - ref) * w1[i] + interval_integral(f, i, n, line.dz);
  }
  for (int i = i0; i > 0; --i) {
    const double ref = Phi[i - 1];
    auto f = [&](int k) { return std::exp(Phi[k] - ref) * h[k]; };
    w1[i - 1] = std::exp(Phi[i] - ref) * w1[i] - interval_integral(f, i - 1, n, line.dz);
  }
  return w1;
}

double linearized_residual(std::span<const double> w1, std::span<const double> w0,
                           std::span<const double> h, const OdeLine& line) {
  const std::vector<double> d = line_derivative(w1, line);
  double m = 0.0;
  for (int i = 0; i < line.size(); ++i) {
    m = std::max(m, std::abs(d[i] + (2.0 * q(line.z(i)) + w0[i]) * w1[i] - h[i]));
  }
  return m;
}

double ode_residual(std::span<const double> w, std::span<const double> h, const OdeLine& line) {
  const std::vector<double> d = line_derivative(w, line);
  double m = 0.0;
  for (int i = 0; i < line.size(); ++i) {
    m = std::max(m, std::abs(d[i] + (2.0 * q(line.z(i)) + w[i]) * w[i] - h[i]));
  }
  return m;
}

FixedPointReport fixed_point(std::span<const double> h, const OdeLine& line, double tol,
                             int max_iter, double alpha0) {
  check_line_size(h, line, "fixed_point");
  FixedPointReport r;
  r.h_norm = line_l2(h, line);
  if (r.h_norm > alpha0) {
    std::ostringstream os;
    os << "||h||_L2 = " << r.h_norm << " exceeds alpha0 = " << alpha0;
    throw HypothesisViolated(os.str());
  }
  std::vector<double> w(line.size(), 0.0);
  double prev_delta = -1.0;
  // Increments at this size are rounding noise; ratios of them say nothing.
  const double noise = 1e-13;
  for (int it = 1; it <= max_iter; ++it) {
    std::vector<double> next = apply_S(w, h, line);
    std::vector<double> diff(next.size());
    for (std::size_t i = 0; i < next.size(); ++i) {
      diff[i] = next[i] - w[i];
    }
    const double delta = line_h1(diff, line);
    w = std::move(next);
    r.iterations = it;
    if (prev_delta > noise) {
      const double k = delta / prev_delta;
      r.factors.push_back(k);
      if (k >= 1.0) {
        std::ostringstream os;
        os << "Picard increment grew by a factor " << k << " at iteration " << it;
        throw NoContraction(os.str());
      }
    }
    prev_delta = delta;
    if (delta < tol) {
      break;
    }
    if (it == max_iter) {
      std::ostringstream os;
      os << "Picard iteration stalled at increment " << delta << " after " << it << " steps";
      throw NoContraction(os.str());
    }
  }
  r.w_h1 = line_h1(w, line);
  r.residual = ode_residual(w, h, line);
  r.sobolev = sobolev_check(w, line);
  r.w = std::move(w);
  return r;
}

CoercivityReport coercivity_check(std::span<const double> v, const FiberGrid& g, double epsilon,
                                  const CoercivityOptions& opt) {
  CoercivityReport r;
  r.theta2 = theta2(v, g);
  if (r.theta2 > opt.c2) {
    std::ostringstream os;
    os << "theta2 = " << r.theta2 << " exceeds c2 = " << opt.c2;
    throw HypothesisFailed(os.str());
  }
  const std::vector<double> dv = fiber_derivative(v, g);
  std::vector<double> f(v.size());
  const double se = std::sqrt(epsilon);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double a = se * dv[i] - (1.0 - v[i] * v[i]) / se;
    f[i] = a * a;
  }
  r.lhs = simpson(f, g.dz());
  r.theta1 = theta1(v, dv, g, epsilon);
  r.rhs = opt.C * r.theta1 + opt.C * std::exp(-opt.c / epsilon);
  r.ratio = r.theta1 != 0.0 ? r.lhs / r.theta1 : 0.0;
  r.inequality_holds = r.lhs <= r.rhs;
  r.energy_gap = fiber_energy(v, dv, g, epsilon) - c0();
  r.energy_bound_holds = r.energy_gap >= -opt.tol_quad;
  return r;
}

nlohmann::json to_json(const FixedPointReport& r) {
  return {{"h_norm", r.h_norm},
          {"w_h1", r.w_h1},
          {"iterations", r.iterations},
          {"factors", r.factors},
          {"residual", r.residual},
          {"sobolev",
           {{"linf_sq", r.sobolev.linf_sq}, {"h1_sq", r.sobolev.h1_sq}, {"holds", r.sobolev.holds}}}};
}

nlohmann::json to_json(const CoercivityReport& r) {
  return {{"lhs", r.lhs},
          {"theta1", r.theta1},
          {"theta2", r.theta2},
          {"rhs", r.rhs},
          {"ratio", r.ratio},
          {"energy_gap", r.energy_gap},
          {"inequality_holds", r.inequality_holds},
          {"energy_bound_holds", r.energy_bound_holds}};
}

}  // namespace iface
