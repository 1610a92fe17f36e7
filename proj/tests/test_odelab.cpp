#include <doctest.h>

#include <cmath>

#include "iface/diagnostics.hpp"
#include "iface/errors.hpp"
#include "iface/odelab.hpp"
#include "iface/quadrature.hpp"
#include "support.hpp"

using namespace iface;

namespace {

double sech2(double z) {
  const double c = std::cosh(z);
  return 1.0 / (c * c);
}

const OdeLine& line() {
  static const OdeLine l;
  return l;
}

std::vector<double> on_line(double (*f)(double)) {
  std::vector<double> out(line().size());
  for (int i = 0; i < line().size(); ++i) {
    out[i] = f(line().z(i));
  }
  return out;
}

template <class F>
std::vector<double> on_line(F f) {
  std::vector<double> out(line().size());
  for (int i = 0; i < line().size(); ++i) {
    out[i] = f(line().z(i));
  }
  return out;
}

double max_abs(std::span<const double> a) {
  double m = 0.0;
  for (double x : a) {
    m = std::max(m, std::abs(x));
  }
  return m;
}

}  // namespace

TEST_CASE("line grid") {
  CHECK(line().size() == 80001);
  CHECK(line().z(line().zero_index()) == 0.0);
  CHECK(line().z(0) == doctest::Approx(-40.0));
  CHECK_THROWS_AS((OdeLine{0.0, 1e-3}.size()), ConfigError);
  CHECK_THROWS_AS((OdeLine{1.0, 1.0}.size()), ConfigError);
}

TEST_CASE("solution operator kernel matches s sech^2 s") {
  const std::vector<double> w0(line().size(), 0.0);
  const auto h = on_line(sech2);
  const auto w1 = apply_S(w0, h, line());
  double err = 0.0;
  for (int i = 0; i < line().size(); ++i) {
    const double z = line().z(i);
    err = std::max(err, std::abs(w1[i] - z * sech2(z)));
  }
  CHECK(err < 1e-8);
  CHECK(w1[line().zero_index()] == 0.0);
  CHECK(linearized_residual(w1, w0, h, line()) < 10 * line().dz * line().dz);
  CHECK(sobolev_check(w1, line()).holds);

  const std::vector<double> zero(line().size(), 0.0);
  CHECK(max_abs(apply_S(w0, zero, line())) == 0.0);
}

TEST_CASE("solution operator is linear in h") {
  testing::Rng rng(51);
  const double a = rng.uniform(-0.5, 0.5);
  const auto w0 = on_line([&](double z) { return a * sech2(z - 0.3) * std::tanh(z); });
  const auto h1 = on_line([](double z) { return sech2(z) * std::cos(z); });
  const auto h2 = on_line([](double z) { return std::exp(-z * z) * z; });
  const double al = 0.7, be = -1.3;
  std::vector<double> mix(h1.size());
  for (std::size_t i = 0; i < mix.size(); ++i) {
    mix[i] = al * h1[i] + be * h2[i];
  }
  const auto s1 = apply_S(w0, h1, line());
  const auto s2 = apply_S(w0, h2, line());
  const auto sm = apply_S(w0, mix, line());
  double err = 0.0;
  for (std::size_t i = 0; i < mix.size(); ++i) {
    err = std::max(err, std::abs(sm[i] - (al * s1[i] + be * s2[i])));
  }
  CHECK(err < 1e-10);
}

TEST_CASE("solution operator is bounded on the hypothesis ball") {
  testing::Rng rng(52);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const double c0 = rng.uniform(-3, 3), c1 = rng.uniform(-3, 3);
    const double b0 = rng.uniform(0.5, 2.0), b1 = rng.uniform(0.5, 2.0);
    const double k = rng.uniform(0.0, 3.0);
    auto w0 = on_line([&](double z) { return sech2((z - c0) / b0) * std::sin(z); });
    const double n0 = line_h1(w0, line());
    const double target = rng.uniform(0.0, 1.4);
    for (double& x : w0) {
      x *= target / n0;
    }
    const auto h = on_line([&](double z) { return sech2((z - c1) / b1) * std::cos(k * z); });
    const auto w1 = apply_S(w0, h, line());
    worst = std::max(worst, line_h1(w1, line()) / line_l2(h, line()));
    CHECK(sobolev_check(w1, line()).holds);
  }
  CHECK(worst <= 10.0);
  MESSAGE("largest measured ||S w0||_H1 / ||h||_L2 = " << worst);
}

TEST_CASE("solution operator rejects a large w0") {
  const auto w0 = on_line([](double z) { return 3.0 * sech2(z); });
  const auto h = on_line(sech2);
  CHECK_THROWS_AS(apply_S(w0, h, line()), HypothesisViolated);
  CHECK_THROWS_AS(apply_S(std::vector<double>(5, 0.0), h, line()), Error);
}

TEST_CASE("fixed point iteration") {
  SUBCASE("h = 0 converges in one iteration") {
    const std::vector<double> zero(line().size(), 0.0);
    const FixedPointReport r = fixed_point(zero, line());
    CHECK(r.iterations == 1);
    CHECK(max_abs(r.w) == 0.0);
  }
  SUBCASE("linear response across a 50x range of ||h||") {
    const double unit = std::sqrt(4.0 / 3.0);
    std::vector<double> ratios;
    std::vector<double> first_factor;
    for (double target : {1e-3, 1e-2, 5e-2}) {
      const auto h = on_line([&](double z) { return target / unit * sech2(z); });
      const FixedPointReport r = fixed_point(h, line());
      CHECK(r.h_norm == doctest::Approx(target).epsilon(1e-6));
      CHECK(r.residual < 10 * line().dz * line().dz);
      CHECK(r.sobolev.holds);
      REQUIRE_FALSE(r.factors.empty());
      for (double f : r.factors) {
        CHECK(f < 1.0);
      }
      ratios.push_back(r.w_h1 / r.h_norm);
      first_factor.push_back(r.factors.front());
    }
    const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
    CHECK(*hi / *lo <= 2.0);
    // Smaller data contracts faster.
    CHECK(first_factor[0] < first_factor[1]);
    CHECK(first_factor[1] < first_factor[2]);
  }
  SUBCASE("the size hypothesis is enforced") {
    const auto h = on_line([](double z) { return 0.2 * sech2(z); });
    CHECK_THROWS_AS(fixed_point(h, line()), HypothesisViolated);
    CHECK_THROWS_AS(fixed_point(h, line(), 1e-13, 100, 0.01), HypothesisViolated);
  }
  SUBCASE("a stalled iteration is reported") {
    const auto h = on_line([](double z) { return 0.04 * sech2(z); });
    CHECK_THROWS_AS(fixed_point(h, line(), 1e-30, 3), NoContraction);
  }
}

TEST_CASE("Sobolev embedding with the sharp constant") {
  testing::Rng rng(53);
  for (int trial = 0; trial < 20; ++trial) {
    const double c = rng.uniform(-5, 5), b = rng.uniform(0.2, 3.0), k = rng.uniform(0, 4);
    const auto w = on_line([&](double z) { return std::exp(-std::abs(z - c) / b) * std::cos(k * z); });
    CHECK(sobolev_check(w, line()).holds);
  }
  // e^{-|z|} attains the constant.
  const auto w = on_line([](double z) { return std::exp(-std::abs(z)); });
  const SobolevCheck s = sobolev_check(w, line());
  CHECK(s.linf_sq == doctest::Approx(0.5 * s.h1_sq).epsilon(1e-4));
}

TEST_CASE("h of the kink family") {
  const double eps = 0.05;
  // Only the fourth order difference error remains.
  auto residual = [&](int per_eps, double s) {
    const FiberGrid g = FiberGrid::for_epsilon(0.3, eps, per_eps);
    const auto v = sample_fiber(g, [&](double z) { return q_eps(z - s, eps); });
    return max_abs(compute_h(v, g, eps));
  };
  for (double s : {0.0, 0.03, -0.07}) {
    const double r256 = residual(256, s);
    const double r512 = residual(512, s);
    CHECK(r512 < 2e-10);
    CHECK(r256 / r512 > 14.0);
  }
  SUBCASE("first order expansion for v = q_eps + eps phi") {
    const FiberGrid gc = FiberGrid::for_epsilon(0.3, eps, 64);
    auto phi = [](double z) { return std::exp(-100 * z * z) * (1 + z); };
    auto dphi = [](double z) { return std::exp(-100 * z * z) * (1 - 200 * z * (1 + z)); };
    const auto v = sample_fiber(gc, [&](double z) { return q_eps(z, eps) + eps * phi(z); });
    const auto h = compute_h(v, gc, eps);
    double err = 0.0;
    for (int i = 0; i < gc.size(); ++i) {
      const double z = gc.z(i);
      const double expect = eps * dphi(z) + 2 * q_eps(z, eps) * phi(z) + eps * phi(z) * phi(z);
      err = std::max(err, std::abs(h[i] - expect));
    }
    CHECK(err < 1e-5);
  }
}

TEST_CASE("zero of a fiber") {
  const double eps = 0.05;
  const FiberGrid g = FiberGrid::for_epsilon(0.3, eps);
  for (double s : {0.0, 0.0314, -0.11}) {
    const auto v = sample_fiber(g, [&](double z) { return q_eps(z - s, eps); });
    CHECK(std::abs(find_zero(v, g) - s) < 1e-7);
  }
  const std::vector<double> plus(g.size(), 1.0);
  CHECK_THROWS_AS(find_zero(plus, g), NoZeroCrossing);
  const auto far = sample_fiber(g, [&](double z) { return q_eps(z - 0.2, eps); });
  CHECK_THROWS_AS(find_zero(far, g), NoZeroCrossing);
}

TEST_CASE("rescaling preserves the H1_eps norm") {
  testing::Rng rng(54);
  const double eps = 0.05;
  for (int trial = 0; trial < 10; ++trial) {
    const double a = rng.uniform(-1, 1), c = rng.uniform(-0.1, 0.1), b = rng.uniform(0.02, 0.1);
    const double s0 = rng.uniform(-0.1, 0.1);
    auto w = [&](double x) { return a / std::cosh((x - c) / b); };
    auto dw = [&](double x) {
      const double u = (x - c) / b;
      return -a / b * std::tanh(u) / std::cosh(u);
    };
    const double l2 = integrate_adaptive([&](double x) { return w(x) * w(x); }, -3, 3);
    const double g2 = integrate_adaptive([&](double x) { return dw(x) * dw(x); }, -3, 3);
    const double lhs = std::sqrt(l2 / eps + eps * g2);
    const RescaledProfile r = rescale(w, [](double) { return 0.0; }, eps, s0, line());
    CHECK(std::abs(line_h1(r.w, line()) / lhs - 1.0) < 1e-8);
    CHECK(max_abs(r.h) == 0.0);
  }
  SUBCASE("zero data and supports") {
    const double s0 = 0.05, rho = 0.3;
    const RescaledProfile z =
        rescale([](double) { return 0.0; },
                [&](double x) { return std::abs(x) < rho ? 1.0 : 0.0; }, eps, s0, line());
    CHECK(max_abs(z.w) == 0.0);
    for (int i = 0; i < line().size(); ++i) {
      if (std::abs(line().z(i) + s0 / eps) > rho / eps + 1e-9) {
        CHECK(z.h[i] == 0.0);
      }
    }
  }
  SUBCASE("a kink fiber rescales to zero") {
    const FiberGrid g = FiberGrid::for_epsilon(0.3, eps, 64);
    const auto v = sample_fiber(g, [&](double z) { return q_eps(z - 0.02, eps); });
    const double s0 = find_zero(v, g);
    const RescaledProfile r = rescale_fiber(v, g, eps, s0, line());
    CHECK(line_h1(r.w, line()) < 1e-6);
    CHECK(line_l2(r.h, line()) < 1e-4);
  }
}

TEST_CASE("coercivity inequalities") {
  const double eps = 0.05;
  const double rho = 0.3;
  const FiberGrid g = FiberGrid::for_epsilon(rho, eps, 64);
  SUBCASE("the kink") {
    const auto v = sample_fiber(g, [&](double z) { return q_eps(z, eps); });
    const CoercivityReport r = coercivity_check(v, g, eps);
    CHECK(r.lhs < 1e-8);
    CHECK(r.theta1 == doctest::Approx((M_PI * M_PI - 6) / 9 * eps * eps).epsilon(0.01));
    CHECK(r.inequality_holds);
    CHECK(r.energy_bound_holds);
  }
  SUBCASE("an oscillating perturbation") {
    const auto v = sample_fiber(g, [&](double z) {
      return q_eps(z, eps) + std::pow(eps, 1.5) * std::sin(z / eps) * chi(z, rho);
    });
    const CoercivityReport r = coercivity_check(v, g, eps);
    CHECK(r.lhs > 0.0);
    CHECK(r.inequality_holds);
    CHECK(r.rhs > 2.0 * r.lhs);
    CHECK(r.energy_bound_holds);
  }
  SUBCASE("a step of the wrong width") {
    const auto v = sample_fiber(g, [&](double z) { return std::tanh(4.0 * z / eps); });
    const CoercivityReport r = coercivity_check(v, g, eps);
    CHECK(r.energy_gap > 0.0);
    CHECK(r.energy_bound_holds);
    CHECK(r.inequality_holds);
  }
  SUBCASE("no interface") {
    const std::vector<double> plus(g.size(), 1.0);
    CHECK_THROWS_AS(coercivity_check(plus, g, eps), HypothesisFailed);
  }
  SUBCASE("reports serialize") {
    const auto v = sample_fiber(g, [&](double z) { return q_eps(z, eps); });
    const nlohmann::json j = to_json(coercivity_check(v, g, eps));
    CHECK(j.contains("lhs"));
    CHECK(j.contains("ratio"));
  }
}
