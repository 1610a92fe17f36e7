#include <doctest.h>

#include <cmath>
#include <numbers>

#include "iface/errors.hpp"
#include "iface/geometry.hpp"
#include "iface/wave.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace iface;

namespace {

GridSpec small_box(double eps, double L = 1.0) {
  GridSpec g;
  g.L = L;
  g.h = eps / 8.0;
  g.dt = GridSpec::cfl_safety * g.h / std::sqrt(2.0);
  g.t_start = 0.0;
  g.t_end = 0.1;
  return g;
}

SpacetimeField constant_field(const GridSpec& g, double eps, double value) {
  InitialData d{Array2(g.nx(), g.ny(), value), Array2(g.nx(), g.ny(), 0.0)};
  return start_field(d, g, eps, 1.0);
}

}  // namespace

TEST_CASE("constant states are stationary") {
  const double eps = 0.1;
  const GridSpec g = small_box(eps, 0.5);
  for (double value : {1.0, 0.0, -1.0}) {
    SpacetimeField f = constant_field(g, eps, value);
    for (int n = 0; n < 20; ++n) {
      step(f);
    }
    for (double v : f.u_curr.values()) {
      CHECK(v == value);
    }
  }
}

TEST_CASE("resting -1 state has zero energy") {
  const double eps = 0.1;
  const SpacetimeField f = constant_field(small_box(eps, 0.5), eps, -1.0);
  CHECK(total_energy(f) == 0.0);
}

TEST_CASE("boosted kink converges at second order") {
  const double ratio = testing::boosted_kink_ratio();
  CHECK(ratio >= 3.0);
  CHECK(ratio <= 5.0);
  CHECK(std::log2(ratio) >= 1.9);
}

TEST_CASE("grid rules are enforced") {
  const double eps = 0.08;
  GridSpec g = small_box(eps);
  CHECK_NOTHROW(g.validate(eps));
  GridSpec coarse = g;
  coarse.h = eps / 7.0;
  CHECK_THROWS_AS(coarse.validate(eps), InvalidGrid);
  GridSpec fast = g;
  fast.dt = g.h;
  CHECK_THROWS_AS(fast.validate(eps), InvalidGrid);
  GridSpec reversed = g;
  reversed.t_end = -1.0;
  CHECK_THROWS_AS(reversed.validate(eps), InvalidGrid);
  CHECK_THROWS_AS(g.validate(eps, 5.0), InvalidGrid);
  GridSpec zero = g;
  zero.h = 0.0;
  CHECK_THROWS_AS(zero.validate(eps), InvalidGrid);

  const GridSpec auto_grid = GridSpec::for_interface(eps, -0.5, 0.0, 0.4, 1.6);
  CHECK_NOTHROW(auto_grid.validate(eps, 1.6));
  CHECK(auto_grid.L >= 1.6 + 0.5 + 0.5 - 1e-12);
  CHECK(auto_grid.dt <= 0.2 * eps);
}

TEST_CASE("mismatched initial data is rejected") {
  const double eps = 0.1;
  const GridSpec g = small_box(eps, 0.5);
  InitialData d{Array2(3, 3), Array2(3, 3)};
  CHECK_THROWS_AS(start_field(d, g, eps, 1.0), InvalidGrid);
}

TEST_CASE("unstable time steps blow up") {
  const double eps = 0.1;
  GridSpec g = small_box(eps, 0.5);
  g.dt = 1.5 * g.h;  // far beyond the CFL limit
  testing::Rng rng(21);
  InitialData d{Array2(g.nx(), g.ny(), -1.0), Array2(g.nx(), g.ny(), 0.0)};
  for (int j = 1; j < g.ny() - 1; ++j) {
    for (int i = 1; i < g.nx() - 1; ++i) {
      d.u(i, j) = rng.uniform(-0.1, 0.1);
    }
  }
  SpacetimeField f = start_field(d, g, eps, 1.0);
  CHECK_THROWS_AS(
      [&] {
        for (int n = 0; n < 500; ++n) {
          step(f);
        }
      }(),
      BlowUp);
}

TEST_CASE("collapsing circle data") {
  const double eps = 0.05;
  const SurfaceChart chart(Surface(LoopPair::collapsing_circle()), ChartDomain{});
  const ProfileParams p{eps, chart.rho()};
  const GridSpec g = GridSpec::for_interface(eps, 0.0, 0.0, 0.0, 1.0 + 2 * chart.rho());
  const InitialData d = interface_initial_data(chart, p, g);
  const int c = g.nx() / 2;
  REQUIRE(g.x1(c) == doctest::Approx(0.0).epsilon(1e-12));

  SUBCASE("velocity vanishes at t = 0") {
    double m = 0.0;
    for (double v : d.u_t.values()) {
      m = std::max(m, std::abs(v));
    }
    CHECK(m < 1e-10);
  }
  SUBCASE("centre is +1 and the circle is the zero level") {
    CHECK(d.u(c, c) == 1.0);
    CHECK(d.u(0, 0) == -1.0);
    const ChartPoint on = chart.invert(0.0, 1.0, 0.0);
    REQUIRE(on.inside_tube);
    CHECK(std::abs(Q_eps(on.y2, p)) < 1e-12);
  }
  SUBCASE("energy is about c0 times the length over eps") {
    const SpacetimeField f = start_field(d, g, eps, 1.0);
    const double expected = c0() / eps * 2.0 * std::numbers::pi;
    CHECK(std::abs(total_energy(f) / expected - 1.0) < 0.10);
  }
  SUBCASE("chart range and box are checked") {
    GridSpec late = g;
    late.t_start = 3.0;
    late.t_end = 3.0;
    CHECK_THROWS_AS(interface_initial_data(chart, p, late), ChartUnavailable);
    GridSpec tight = g;
    tight.L = 1.0;
    CHECK_THROWS_AS(interface_initial_data(chart, p, tight), InvalidGrid);
  }
}

TEST_CASE("evolution keeps the 90 degree symmetry exactly and conserves energy") {
  const double eps = 0.1;
  const SurfaceChart chart(Surface(LoopPair::collapsing_circle()), ChartDomain{});
  const ProfileParams p{eps, chart.rho()};
  const GridSpec g = GridSpec::for_interface(eps, -0.2, 0.0, 0.3, 1.0 + 2 * chart.rho());
  const InitialData d = interface_initial_data(chart, p, g);
  const int n = g.nx();
  double asym = 0.0;
  long last = 0;
  std::vector<long> levels;
  auto check = [&](const LevelView& lv) {
    levels.push_back(lv.level);
    CHECK(lv.t == doctest::Approx(g.t_start + lv.level * g.dt).epsilon(1e-12));
    if (lv.level % 10 != 0) {
      return;
    }
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        asym = std::max(asym, std::abs(lv.curr(i, j) - lv.curr(n - 1 - j, i)));
      }
    }
    last = lv.level;
  };
  const EvolveStats st = evolve(d, g, eps, {check}, 8);
  CHECK(asym <= 1e-10);
  CHECK(last != 0);
  CHECK(st.max_relative_drift < 0.01);
  CHECK(st.energy_initial > 0.0);

  SUBCASE("levels arrive forward from 0, then backward from -1") {
    REQUIRE(levels.size() == static_cast<std::size_t>(st.steps_forward + st.steps_backward + 1));
    for (long k = 0; k <= st.steps_forward; ++k) {
      CHECK(levels[k] == k);
    }
    for (long k = 1; k <= st.steps_backward; ++k) {
      CHECK(levels[st.steps_forward + k] == -k);
    }
  }
}

TEST_CASE("disturbances travel at most one unit of distance per unit time") {
  const double eps = 0.1;
  GridSpec g = small_box(eps, 1.5);
  const double R = 0.3;
  InitialData d{Array2(g.nx(), g.ny(), -1.0), Array2(g.nx(), g.ny(), 0.0)};
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      const double r = std::hypot(g.x1(i), g.x2(j));
      if (r < R) {
        d.u(i, j) = -1.0 + 0.5 * std::pow(std::cos(0.5 * std::numbers::pi * r / R), 4);
      }
    }
  }
  SpacetimeField f = start_field(d, g, eps, 1.0);
  for (int n = 0; n < 80; ++n) {
    step(f);
  }
  double leak = 0.0;
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      if (std::hypot(g.x1(i), g.x2(j)) > R + f.t + 2 * g.h) {
        leak = std::max(leak, std::abs(f.u_curr(i, j) + 1.0));
      }
    }
  }
  CHECK(leak < 1e-6);
}

TEST_CASE("snapshots round trip bit for bit") {
  const auto dir = testing::scratch_dir("snap");
  testing::Rng rng(22);
  Snapshot s{0.125, 0.01, 1.0, 0.08, 3, 5, Array2(17, 9)};
  for (double& v : s.u.values()) {
    v = rng.uniform(-1.0, 1.0);
  }
  write_snapshot(s, dir / "a");
  const Snapshot r = read_snapshot(dir / "a");
  CHECK(r.t == s.t);
  CHECK(r.h == s.h);
  CHECK(r.L == s.L);
  CHECK(r.epsilon == s.epsilon);
  CHECK(r.i0 == 3);
  CHECK(r.j0 == 5);
  CHECK(r.u == s.u);
  CHECK_THROWS_AS(read_snapshot(dir / "missing"), IoError);
  CHECK_THROWS_AS(write_snapshot(s, "/nonexistent-dir/x"), IoError);
}

TEST_CASE("snapshot writer keeps first, strided and last levels") {
  const double eps = 0.1;
  GridSpec g = small_box(eps, 0.25);
  g.t_end = 10 * g.dt;
  g.t_begin = -3 * g.dt;
  InitialData d{Array2(g.nx(), g.ny(), -1.0), Array2(g.nx(), g.ny(), 0.0)};
  for (int stride : {0, 4}) {
    const auto dir = testing::scratch_dir("writer" + std::to_string(stride));
    SnapshotWriter w(dir, stride, eps);
    evolve(d, g, eps, {[&](const LevelView& lv) { w(lv); }});
    const auto files = w.finish();
    if (stride == 0) {
      CHECK(files.size() == 2);
    } else {
      // 0 (first), 4, 8, then the last backward level -3.
      CHECK(files.size() == 4);
    }
    CHECK(read_snapshot(files.back()).t == doctest::Approx(-3 * g.dt));
  }
}
