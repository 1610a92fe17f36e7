// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails. Pass criterion numbers as arguments to
// run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "iface/config.hpp"
#include "iface/decomposition.hpp"
#include "iface/diagnostics.hpp"
#include "iface/errors.hpp"
#include "iface/geometry.hpp"
#include "iface/harness.hpp"
#include "iface/odelab.hpp"
#include "iface/profile.hpp"
#include "iface/quadrature.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace iface;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * kPi;

// Pinned tolerances.
constexpr double kKinkRatioLo = 3.0;   // 4 - 25%
constexpr double kKinkRatioHi = 5.0;   // 4 + 25%
constexpr double kKinkSeconds = 30.0;
constexpr double kSweepSeconds = 900.0;
constexpr double kConstantTol = 1e-10;
constexpr double kTheta1LawTol = 0.01;
constexpr double kTranslateTol = 1e-6;    // times eps
constexpr double kResidualTol = 1e-8;
constexpr double kEquivarianceTol = 1e-8;  // times eps
constexpr double kBruteTol = 1e-5;
constexpr double kKernelTol = 1e-8;
constexpr double kStabilitySpread = 2.0;
constexpr double kRoundtripTol = 1e-9;
constexpr double kNormalTol = 1e-10;
constexpr double kClosedFormTol = 1e-10;

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Detail {
 public:
  template <class T>
  Detail& operator<<(const T& x) {
    os_ << x;
    return *this;
  }
  std::string str() const { return os_.str(); }

 private:
  std::ostringstream os_;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double sech2(double z) {
  const double c = std::cosh(z);
  return 1.0 / (c * c);
}

// Shared expensive runs, computed on first use.
struct Runs {
  std::optional<SweepReport> sweep;
  double sweep_seconds = 0.0;
  std::optional<EpsilonRun> null_run;

  const SweepReport& get_sweep() {
    if (!sweep) {
      const auto t0 = std::chrono::steady_clock::now();
      sweep = run_sweep(RunConfig{});
      sweep_seconds = seconds_since(t0);
    }
    return *sweep;
  }

  const EpsilonRun& get_null() {
    if (!null_run) {
      RunConfig c;
      c.mode = RunMode::manufactured;
      null_run = run_epsilon(c, 0.08);
    }
    return *null_run;
  }
};

Runs runs;

bool all_ok(const SweepReport& s, Detail& d) {
  bool ok = true;
  for (const EpsilonRun& r : s.runs) {
    if (!r.ok) {
      d << "eps " << r.epsilon << " failed: " << r.error << "; ";
      ok = false;
    }
  }
  return ok;
}

const FitResult* fit_of(const SweepReport& s, const std::string& name, Detail& d) {
  const FitOutcome& f = s.fits.at(name);
  if (!f.ok) {
    d << name << " fit failed: " << f.error << "; ";
    return nullptr;
  }
  return &f.fit;
}

Outcome c1_boosted_kink() {
  const auto t0 = std::chrono::steady_clock::now();
  const double ratio = testing::boosted_kink_ratio(0.1, 0.3, 0.5);
  const double secs = seconds_since(t0);
  Detail d;
  d << "error ratio " << ratio << " (band [" << kKinkRatioLo << ", " << kKinkRatioHi << "]), "
    << secs << " s";
  return {ratio >= kKinkRatioLo && ratio <= kKinkRatioHi && secs < kKinkSeconds, d.str()};
}

Outcome c2_theta_scaling() {
  const SweepReport& s = runs.get_sweep();
  const AcceptanceBands& b = s.config.bands;
  Detail d;
  bool pass = all_ok(s, d);
  for (const char* name : {"sup_Theta1", "sup_Theta2", "sup_Theta3"}) {
    const FitResult* f = fit_of(s, name, d);
    if (f == nullptr) {
      pass = false;
      continue;
    }
    d << name << " slope " << f->slope << " R2 " << f->r2 << "; ";
    pass = pass && f->slope >= b.theta_slope_min && f->r2 >= b.theta_r2_min;
  }
  d << "sweep " << runs.sweep_seconds << " s";
  return {pass && runs.sweep_seconds <= kSweepSeconds, d.str()};
}

Outcome c3_main_rate() {
  const SweepReport& s = runs.get_sweep();
  const AcceptanceBands& b = s.config.bands;
  Detail d;
  bool pass = all_ok(s, d);
  const FitResult* f = fit_of(s, "h1_error", d);
  if (f == nullptr) {
    return {false, d.str()};
  }
  d << "slope " << f->slope << "; ratio/eps:";
  for (const EpsilonRun& r : s.runs) {
    d << " " << r.h1_error / r.epsilon;
  }
  // Runs are ordered from the largest to the smallest epsilon.
  const double growth =
      (s.runs.back().h1_error / s.runs.back().epsilon) / (s.runs.front().h1_error / s.runs.front().epsilon);
  d << "; growth " << growth;
  return {pass && f->slope >= b.h1_slope_min && growth <= b.ratio_growth_max, d.str()};
}

Outcome c4_modulation() {
  const SweepReport& s = runs.get_sweep();
  Detail d;
  bool pass = all_ok(s, d);
  const FitResult* f = fit_of(s, "sup_shift_h1", d);
  if (f == nullptr) {
    return {false, d.str()};
  }
  d << "slope " << f->slope;
  return {pass && f->slope >= s.config.bands.shift_slope_min, d.str()};
}

Outcome c5_far_field() {
  const SweepReport& s = runs.get_sweep();
  const AcceptanceBands& b = s.config.bands;
  Detail d;
  bool pass = all_ok(s, d);
  const FitResult* e = fit_of(s, "far_energy", d);
  const FitResult* v = fit_of(s, "far_deviation", d);
  if (e == nullptr || v == nullptr) {
    return {false, d.str()};
  }
  d << "energy slope " << e->slope << ", deviation slope " << v->slope;
  return {pass && e->slope >= b.far_energy_slope_min && v->slope >= b.far_deviation_slope_min,
          d.str()};
}

Outcome c6_gradient() {
  const SweepReport& s = runs.get_sweep();
  Detail d;
  bool pass = all_ok(s, d);
  for (std::size_t k = 0; k + 1 < s.runs.size(); ++k) {
    const EpsilonRun& a = s.runs[k];
    const EpsilonRun& c = s.runs[k + 1];
    const double measured = c.grad_U_l2 / a.grad_U_l2;
    const double expected = std::sqrt(a.epsilon / c.epsilon);
    d << "ratio " << measured << " vs " << expected << "; ";
    pass = pass && std::abs(measured / expected - 1.0) <= s.config.bands.gradient_ratio_tol;
  }
  return {pass, d.str()};
}

Outcome c7_constants() {
  const double quad_c0 = integrate_adaptive(
      [](double s) {
        const double qp = q_prime(s);
        const double w = 1.0 - q(s) * q(s);
        return 0.5 * qp * qp + 0.5 * w * w;
      },
      -40.0, 40.0);
  const double quad_a = integrate_adaptive(
      [](double s) {
        const double qp = q_prime(s);
        return qp * qp;
      },
      -40.0, 40.0);
  Detail d;
  d << "c0 err " << std::abs(quad_c0 - 4.0 / 3.0) << ", a err " << std::abs(quad_a - 4.0 / 3.0)
    << ", c0() err " << std::abs(c0() - 4.0 / 3.0);
  return {std::abs(quad_c0 - 4.0 / 3.0) < kConstantTol && std::abs(quad_a - 4.0 / 3.0) < kConstantTol &&
              std::abs(c0() - 4.0 / 3.0) < kConstantTol,
          d.str()};
}

Outcome c8_theta1_law() {
  // K from its own quadrature, not the library's cached value.
  const double K = integrate_adaptive(
      [](double s) {
        const double qp = q_prime(s);
        return s * s * qp * qp;
      },
      -40.0, 40.0);
  Detail d;
  d << "K " << K << " (closed form err " << std::abs(K - (kPi * kPi - 6.0) / 9.0) << "); ";
  bool pass = true;
  for (double eps : {0.1, 0.05, 0.025}) {
    const FiberGrid g = FiberGrid::for_epsilon(0.5, eps, 64);
    const auto v = sample_fiber(g, [&](double z) { return q_eps(z, eps); });
    const auto dv = sample_fiber(g, [&](double z) { return q_eps_jet(z, eps).d1; });
    const double rel = theta1(v, dv, g, eps) / (K * eps * eps) - 1.0;
    d << "eps " << eps << " rel " << rel << "; ";
    pass = pass && std::abs(rel) < kTheta1LawTol;
  }
  return {pass, d.str()};
}

Outcome c9_projection() {
  const double eps = 0.05;
  const ProfileParams p{eps, 0.3};
  const FiberGrid g = FiberGrid::for_epsilon(0.3, eps);
  auto bump = [](double z, double w) {
    const double x = z / w;
    return std::abs(x) < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - x * x)) : 0.0;
  };
  double translate_err = 0.0, residual = 0.0, equiv = 0.0, idem = 0.0, brute = 0.0;

  for (double sigma : {0.07, -0.03, 0.0, 0.1234}) {
    const auto v = sample_fiber(g, [&](double z) { return Q_eps(z - sigma, p); });
    const DecompositionResult r = optimal_shift(v, g, p);
    translate_err = std::max(translate_err, std::abs(r.s_star - sigma) / eps);
    residual = std::max(residual, std::abs(r.residual_normalized));
  }

  testing::Rng rng(90);
  for (int trial = 0; trial < 20; ++trial) {
    const double sigma = rng.uniform(-0.05, 0.05);
    const double c = 2.0 * rng.integer(-8, 8) * g.dz();
    const double amp = 0.01 * std::sqrt(eps) * rng.uniform(-1.0, 1.0);
    auto fiber = [&](double shift) {
      return sample_fiber(g, [&](double z) {
        const double x = z - shift;
        return Q_eps(x - sigma, p) + amp * bump(x - 0.01, 0.06);
      });
    };
    const DecompositionResult a = optimal_shift(fiber(0.0), g, p);
    const DecompositionResult b = optimal_shift(fiber(c), g, p);
    equiv = std::max(equiv, std::abs(b.s_star - (a.s_star + c)) / eps);
    const auto again_v = sample_fiber(g, [&](double z) { return Q_eps(z - a.s_star, p); });
    idem = std::max(idem, std::abs(optimal_shift(again_v, g, p).s_star - a.s_star) / eps);
  }

  for (int trial = 0; trial < 100; ++trial) {
    const double sigma = rng.uniform(-0.1, 0.1);
    const double c = rng.uniform(-0.1, 0.1);
    const double w = rng.uniform(0.03, 0.1);
    const double amp = 0.01 * std::sqrt(eps) * rng.uniform(-1.0, 1.0);
    const auto v = sample_fiber(g, [&](double z) { return Q_eps(z - sigma, p) + amp * bump(z - c, w); });
    const DecompositionResult r = optimal_shift(v, g, p);
    residual = std::max(residual, std::abs(r.residual_normalized));
    double best = r.s_star, best_val = INFINITY;
    for (int i = 0; i <= 400; ++i) {
      const double sig = r.s_star - 0.002 + i * 1e-5;
      const double dist = shift_distance(v, sig, g, p);
      if (dist < best_val) {
        best_val = dist;
        best = sig;
      }
    }
    brute = std::max(brute, std::abs(r.s_star - best));
  }

  Detail d;
  d << "translate " << translate_err << " eps, residual " << residual << ", equivariance " << equiv
    << " eps, idempotence " << idem << " eps, brute-force gap " << brute;
  return {translate_err <= kTranslateTol && residual <= kResidualTol && equiv <= kEquivarianceTol &&
              idem <= kEquivarianceTol && brute <= kBruteTol,
          d.str()};
}

Outcome c10_ode_lab() {
  const OdeLine line;
  auto on_line = [&](const std::function<double(double)>& f) {
    std::vector<double> out(line.size());
    for (int i = 0; i < line.size(); ++i) {
      out[i] = f(line.z(i));
    }
    return out;
  };
  const std::vector<double> zero(line.size(), 0.0);
  const auto w1 = apply_S(zero, on_line(sech2), line);
  double kernel = 0.0;
  for (int i = 0; i < line.size(); ++i) {
    kernel = std::max(kernel, std::abs(w1[i] - line.z(i) * sech2(line.z(i))));
  }
  bool sobolev = sobolev_check(w1, line).holds;

  bool contract = true;
  std::vector<double> ratios;
  double worst_factor = 0.0;
  const double unit = std::sqrt(4.0 / 3.0);
  for (double target : {1e-3, 1e-2, 5e-2}) {
    const FixedPointReport r = fixed_point(on_line([&](double z) { return target / unit * sech2(z); }), line);
    for (double f : r.factors) {
      worst_factor = std::max(worst_factor, f);
      contract = contract && f < 1.0;
    }
    sobolev = sobolev && r.sobolev.holds;
    ratios.push_back(r.w_h1 / r.h_norm);
  }
  const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
  const double spread = *hi / *lo;

  Detail d;
  d << "kernel err " << kernel << ", worst factor " << worst_factor << ", H1/L2 spread " << spread
    << ", Sobolev " << (sobolev ? "holds" : "violated");
  return {kernel < kKernelTol && contract && spread <= kStabilitySpread && sobolev, d.str()};
}

Outcome c11_geometry() {
  testing::QuietLog quiet;
  const SurfaceChart circle(Surface(LoopPair::collapsing_circle()), ChartDomain{});
  const SurfaceChart perturbed(Surface(perturbed_loop(0.05, 48)), ChartDomain{-0.5, 0.5, 0.2});
  testing::Rng rng(91);
  double roundtrip = 0.0, normal = 0.0, closed = 0.0;
  bool inverted = true;
  for (const SurfaceChart* chart : {&circle, &perturbed}) {
    const double rho = chart->rho();
    const ChartDomain& dom = chart->domain();
    for (int n = 0; n < 500; ++n) {
      const double y0 = rng.uniform(dom.y0_min + 0.05, dom.y0_max - 0.05);
      const double y1 = rng.uniform(0.0, kTwoPi);
      const double y2 = rng.uniform(-1.9 * rho, 1.9 * rho);
      const Vec3 x = chart->map(y0, y1, y2);
      const ChartPoint pt = chart->invert(x[0], x[1], x[2]);
      inverted = inverted && pt.inside_tube;
      double gap = std::fmod(std::abs(pt.y1 - y1), kTwoPi);
      gap = std::min(gap, kTwoPi - gap);
      roundtrip = std::max({roundtrip, std::abs(pt.y0 - y0), gap, std::abs(pt.y2 - y2)});

      const SurfaceFrame f = chart->surface().frame(y0, y1);
      normal = std::max({normal, std::abs(minkowski(f.nu, f.nu) - 1.0), std::abs(minkowski(f.nu, f.t0)),
                         std::abs(minkowski(f.nu, f.t1))});
      if (chart == &circle) {
        const double c = std::cos(y0);
        closed = std::max({closed, std::abs(std::hypot(f.psi[1], f.psi[2]) - c),
                           std::abs(f.nu[0] - std::tan(y0)),
                           std::abs(f.nu[1] + std::cos(y1) / c),
                           std::abs(f.nu[2] + std::sin(y1) / c)});
      }
    }
  }
  // The circle chart is singular where y2 = cos^2 y0.
  bool floor_enforced = false;
  try {
    circle.surface().jacobian(0.3, 1.0, std::cos(0.3) * std::cos(0.3));
  } catch (const SingularChart&) {
    floor_enforced = true;
  }
  Detail d;
  d << "roundtrip " << roundtrip << ", normal " << normal << ", closed forms " << closed
    << ", det floor " << (floor_enforced ? "enforced" : "missing");
  return {inverted && roundtrip < kRoundtripTol && normal < kNormalTol && closed < kClosedFormTol &&
              floor_enforced,
          d.str()};
}

Outcome c12_null() {
  const EpsilonRun& r = runs.get_null();
  const double floor = RunConfig{}.bands.null_floor;
  Detail d;
  d << "h1 error " << r.h1_error << ", shift H1 " << r.sup_shift_h1 << ", shift sup " << r.sup_shift_abs
    << ", far deviation " << r.far_deviation << ", far energy " << r.far_energy;
  const bool pass = r.h1_error < floor && r.sup_shift_h1 < floor && r.sup_shift_abs < floor &&
                    r.far_deviation < floor && r.far_energy < floor;
  return {pass, d.str()};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    only.insert(std::atoi(argv[i]));
  }
  testing::QuietLog quiet;
  const std::vector<Criterion> criteria = {
      {1, "boosted kink convergence", c1_boosted_kink},
      {2, "Theta scaling", c2_theta_scaling},
      {3, "H1_eps error rate", c3_main_rate},
      {4, "modulation norm rate", c4_modulation},
      {5, "far-field rates", c5_far_field},
      {6, "gradient divergence", c6_gradient},
      {7, "profile constants", c7_constants},
      {8, "theta1 fiber law", c8_theta1_law},
      {9, "projection suite", c9_projection},
      {10, "ODE lab", c10_ode_lab},
      {11, "geometry suite", c11_geometry},
      {12, "pipeline null test", c12_null},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    if (!only.empty() && only.count(c.id) == 0) {
      continue;
    }
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) {
      ++failed;
    }
    std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
