#include <doctest.h>

#include <cmath>
#include <numbers>

#include "iface/decomposition.hpp"
#include "iface/errors.hpp"
#include "support.hpp"

using namespace iface;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Smooth bump supported in |z| < w.
double bump(double z, double w) {
  const double x = z / w;
  return std::abs(x) < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - x * x)) : 0.0;
}

struct Setup {
  double eps = 0.05;
  ProfileParams p{0.05, 0.3};
  FiberGrid g = FiberGrid::for_epsilon(0.3, 0.05);
};

std::vector<double> translate_Q(const Setup& s, double sigma) {
  return sample_fiber(s.g, [&](double z) { return Q_eps(z - sigma, s.p); });
}

// Argmin of the L2 distance over a dense grid of spacing step around centre.
double brute_argmin(std::span<const double> v, const Setup& s, double centre, double half,
                    double step) {
  double best = centre;
  double best_val = INFINITY;
  const int n = static_cast<int>(std::lround(2 * half / step));
  for (int i = 0; i <= n; ++i) {
    const double sig = centre - half + i * step;
    const double d = shift_distance(v, sig, s.g, s.p);
    if (d < best_val) {
      best_val = d;
      best = sig;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("exact translates are recovered") {
  const Setup s;
  for (double sigma : {0.07, -0.03, 0.0, 0.1234}) {
    const auto v = translate_Q(s, sigma);
    const DecompositionResult r = optimal_shift(v, s.g, s.p);
    CHECK(std::abs(r.s_star - sigma) < 1e-6 * s.eps);
    CHECK(r.min_value < 1e-6);
    CHECK(std::abs(r.residual_normalized) <= 1e-8);
    CHECK(r.unique);
    CHECK(r.convexity_margin > 0.0);
  }
}

TEST_CASE("the untruncated kink projects to zero shift") {
  const Setup s;
  const auto v = sample_fiber(s.g, [&](double z) { return q_eps(z, s.eps); });
  const DecompositionResult r = optimal_shift(v, s.g, s.p);
  CHECK(std::abs(r.s_star) < 1e-6);
  // ||q_eps - Q_eps|| is exponentially small in 1/eps.
  CHECK(r.min_value < 1e-3);
  CHECK(r.min_value > 0.0);
}

TEST_CASE("orthogonality residual") {
  const Setup s;
  SUBCASE("vanishes for the zero fiber at zero shift") {
    const std::vector<double> zero(s.g.size(), 0.0);
    CHECK(std::abs(orthogonality_residual(zero, 0.0, s.g, s.p)) < 1e-14);
  }
  SUBCASE("matches the slope of the distance functional") {
    const double sigma = 0.04;
    const auto v = translate_Q(s, sigma);
    auto eta = [&](double t) {
      const double d = shift_distance(v, t, s.g, s.p);
      return 0.5 * d * d;
    };
    for (double off : {0.1, -0.1, 0.5}) {
      const double t = sigma + off * s.eps;
      const double r = orthogonality_residual(v, t, s.g, s.p);
      const double h = 1e-6;
      const double slope = (eta(t + h) - eta(t - h)) / (2 * h);
      CHECK((r > 0) == (off > 0));
      CHECK(r == doctest::Approx(slope).epsilon(1e-5));
    }
  }
}

TEST_CASE("perturbed fibers agree with a brute-force argmin") {
  const Setup s;
  testing::Rng rng(41);
  for (int trial = 0; trial < 100; ++trial) {
    const double sigma = rng.uniform(-0.1, 0.1);
    const double c = rng.uniform(-0.1, 0.1);
    const double w = rng.uniform(0.03, 0.1);
    const double amp = 0.01 * std::sqrt(s.eps) * rng.uniform(-1.0, 1.0);
    const auto v = sample_fiber(s.g, [&](double z) { return Q_eps(z - sigma, s.p) + amp * bump(z - c, w); });
    const DecompositionResult r = optimal_shift(v, s.g, s.p);
    CHECK(std::abs(r.residual_normalized) <= 1e-8);
    const double brute = brute_argmin(v, s, r.s_star, 0.002, 1e-5);
    CHECK(std::abs(r.s_star - brute) <= 1e-5);
  }
}

TEST_CASE("projection is translation equivariant and idempotent") {
  const Setup s;
  testing::Rng rng(42);
  for (int trial = 0; trial < 20; ++trial) {
    const double sigma = rng.uniform(-0.05, 0.05);
    // Even grid steps preserve the Simpson weight pattern. Staying within eps keeps
    // the content clear of the window edges.
    const double c = 2.0 * rng.integer(-8, 8) * s.g.dz();
    const double amp = 0.01 * std::sqrt(s.eps) * rng.uniform(-1.0, 1.0);
    auto fiber = [&](double shift) {
      return sample_fiber(s.g, [&](double z) {
        const double x = z - shift;
        return Q_eps(x - sigma, s.p) + amp * bump(x - 0.01, 0.06);
      });
    };
    const DecompositionResult a = optimal_shift(fiber(0.0), s.g, s.p);
    const DecompositionResult b = optimal_shift(fiber(c), s.g, s.p);
    CHECK(std::abs(b.s_star - (a.s_star + c)) < 1e-8 * s.eps);

    const DecompositionResult again = optimal_shift(translate_Q(s, a.s_star), s.g, s.p);
    CHECK(std::abs(again.s_star - a.s_star) < 1e-8 * s.eps);
  }
}

TEST_CASE("the convexity certificate holds near the minimizer") {
  const Setup s;
  const auto v = sample_fiber(s.g, [&](double z) { return Q_eps(z - 0.02, s.p) + 0.003 * bump(z, 0.05); });
  const DecompositionResult r = optimal_shift(v, s.g, s.p);
  const double a = 4.0 / 3.0;
  const double reach = 4.0 * s.eps * 0.05 / a;
  for (int i = -10; i <= 10; ++i) {
    CHECK(shift_derivatives(v, r.s_star + reach * i / 10.0, s.g, s.p).d2 > 0.0);
  }
}

TEST_CASE("fibers without a recognizable interface are rejected") {
  const Setup s;
  const std::vector<double> plus(s.g.size(), 1.0);
  CHECK_THROWS_AS(optimal_shift(plus, s.g, s.p), HypothesisFailed);
  const auto anti = sample_fiber(s.g, [&](double z) { return -Q_eps(z, s.p); });
  CHECK_THROWS_AS(optimal_shift(anti, s.g, s.p), HypothesisFailed);
  // The best translate sits at the edge of the scan window.
  CHECK_THROWS_AS(optimal_shift(translate_Q(s, 0.16), s.g, s.p), HypothesisFailed);
  CHECK_THROWS_AS(optimal_shift(std::vector<double>(3, 0.0), s.g, s.p), Error);
}

TEST_CASE("shift field norms and derivatives") {
  const double eps = 0.05;
  const int n1 = 64;
  const std::vector<double> y0 = {-0.2, -0.1, 0.0, 0.1, 0.2};
  ShiftField f(y0, n1);
  for (int sl = 0; sl < 5; ++sl) {
    for (int k = 0; k < n1; ++k) {
      f(sl, k) = eps * std::sin(kTwoPi * k / n1);
    }
  }
  for (int sl = 0; sl < 5; ++sl) {
    CHECK(shift_h1_norm_sq(f, sl) == doctest::Approx(kTwoPi * eps * eps).epsilon(1e-5));
  }
  CHECK(shift_h1_norm_sq(ShiftField(y0, n1), 2) == 0.0);

  SUBCASE("second order y0 differences are exact on quadratics") {
    ShiftField g(y0, 8);
    for (int sl = 0; sl < 5; ++sl) {
      for (int k = 0; k < 8; ++k) {
        g(sl, k) = 3.0 * y0[sl] * y0[sl] - y0[sl];
      }
    }
    for (int sl = 0; sl < 5; ++sl) {
      CHECK(g.d0(sl, 3) == doctest::Approx(6.0 * y0[sl] - 1.0).epsilon(1e-12));
    }
  }
  SUBCASE("interpolation is bilinear and periodic in y1") {
    CHECK(f.at(0.05, 0.0) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(f.at(0.0, kTwoPi * 16 / n1) == doctest::Approx(eps));
    CHECK(f.at(0.0, kTwoPi * 16 / n1 + kTwoPi) == doctest::Approx(eps));
    CHECK(f.at(0.9, kTwoPi * 16 / n1) == doctest::Approx(eps));  // clamped in y0
    CHECK(f.d1_at(0.0, 0.0) == doctest::Approx(eps).epsilon(1e-5));
  }
  SUBCASE("too few slices") {
    ShiftField two({0.0, 0.1}, n1);
    CHECK_THROWS_AS(shift_h1_norm_sq(two, 0), InsufficientSlices);
    CHECK_THROWS_AS(two.d0(0, 0), InsufficientSlices);
    CHECK(two.d0_at(0.05, 0.0) == 0.0);
    CHECK_THROWS_AS(ShiftField({}, n1), ConfigError);
  }
}

TEST_CASE("comparison field with zero shift") {
  testing::QuietLog quiet;
  const double eps = 0.1;
  const SurfaceChart chart(Surface(LoopPair::collapsing_circle()), ChartDomain{});
  const ProfileParams p{eps, chart.rho()};
  const FiberGrid fiber = FiberGrid::for_epsilon(chart.rho(), eps);
  const SliceGrid slices = SliceGrid::midpoints(-0.6, 0.6, 8, 32, fiber);
  const ComparisonField U(chart, ShiftField::zero(slices), p);

  SUBCASE("equals the prepared data at t = 0") {
    const GridSpec g = GridSpec::for_interface(eps, 0.0, 0.0, 0.0, 1.0 + 2 * chart.rho());
    const InitialData d = interface_initial_data(chart, p, g);
    const Array2 u = U.sample_grid(0.0, g);
    double m = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      m = std::max(m, std::abs(u.values()[i] - d.u.values()[i]));
    }
    CHECK(m < 1e-12);
  }
  SUBCASE("centre of the shrinking circle is +1") {
    for (double t : {-0.4, 0.0, 0.4}) {
      CHECK(U.sample(t, 0.0, 0.0).u == 1.0);
    }
  }
  SUBCASE("continuous across the tube boundary") {
    for (double y1 : {0.3, 2.0, 4.0}) {
      for (double side : {-1.0, 1.0}) {
        const Vec3 in = chart.map(0.1, y1, side * 1.99 * chart.rho());
        const double r = std::hypot(in[1], in[2]);
        const double out = r + side * (-0.02);  // step past the tube edge
        const double c = std::cos(y1), sn = std::sin(y1);
        const double u_in = U.sample(in[0], in[1], in[2]).u;
        const double u_out = U.sample(in[0], out * c, out * sn).u;
        CHECK(std::abs(u_in - u_out) < 1e-12);
      }
    }
  }
  SUBCASE("tube comparison of U with itself") {
    const PullbackSlice s = pullback(U, chart, 0.0, fiber, 32);
    const TubeComparison tc = tube_comparison(s, chart, U);
    CHECK(tc.difference.l2 < 1e-24);
    CHECK(tc.difference.grad < 1e-20);
    CHECK(tc.grad_U_sq > 0.0);
  }
}

TEST_CASE("shift table export") {
  const auto dir = testing::scratch_dir("shift");
  ShiftField f({0.0, 0.1, 0.2}, 4);
  std::vector<SliceDiagnostics> d(3);
  for (auto& x : d) {
    x.residual.assign(4, 0.0);
  }
  write_shift_csv(dir / "shift.csv", f, d);
  CHECK(std::filesystem::file_size(dir / "shift.csv") > 0);
  CHECK_THROWS_AS(write_shift_csv("/nonexistent-dir/s.csv", f, d), IoError);
}
