#include "iface/profile.hpp"

#include <cmath>
#include <sstream>

#include "iface/errors.hpp"
#include "iface/log.hpp"
#include "iface/quadrature.hpp"

namespace iface {

ProfileParams ProfileParams::make(double epsilon, double rho) {
  if (!(epsilon > 0.0 && epsilon <= 1.0)) {
    throw ConfigError("epsilon must lie in (0, 1]");
  }
  if (!(rho > 0.0)) {
    throw ConfigError("rho must be positive");
  }
  ProfileParams p{epsilon, rho};
  if (!p.well_separated()) {
    std::ostringstream os;
    os << "epsilon = " << epsilon << " exceeds rho/4 = " << rho / 4.0
       << "; the cutoff profile is visibly compressed";
    log_warning(os.str());
  }
  return p;
}

double q(double z) { return std::tanh(z); }

double q_prime(double z) {
  const double c = std::cosh(z);
  return 1.0 / (c * c);
}

double q_eps(double z, double epsilon) { return std::tanh(z / epsilon); }

Jet1 q_eps_jet(double z, double epsilon) {
  const double x = z / epsilon;
  const double t = std::tanh(x);
  const double c = std::cosh(x);
  const double sech2 = 1.0 / (c * c);
  return {t, sech2 / epsilon, -2.0 * t * sech2 / (epsilon * epsilon)};
}

namespace {

// Logistic blend g(t) = phi(t) / (phi(t) + phi(1 - t)), phi(t) = exp(-1/t).
Jet1 blend(double t) {
  if (t <= 0.0) {
    return {0.0, 0.0, 0.0};
  }
  if (t >= 1.0) {
    return {1.0, 0.0, 0.0};
  }
  const double s = 1.0 - t;
  const double r = 1.0 / t - 1.0 / s;
  const double r1 = -1.0 / (t * t) - 1.0 / (s * s);
  const double r2 = 2.0 / (t * t * t) - 2.0 / (s * s * s);
  double g;
  double gc;  // 1 - g
  if (r > 0.0) {
    const double e = std::exp(-r);
    g = e / (1.0 + e);
    gc = 1.0 / (1.0 + e);
  } else {
    const double e = std::exp(r);
    g = 1.0 / (1.0 + e);
    gc = e / (1.0 + e);
  }
  const double ggc = g * gc;
  const double g1 = -ggc * r1;
  const double g2 = -g1 * (gc - g) * r1 - ggc * r2;
  return {g, g1, g2};
}

double sign(double z) { return (z > 0.0) - (z < 0.0); }

// q_eps(z) - sign(z), accurate in the tails.
double q_minus_sign(double z, double epsilon) {
  if (z == 0.0) {
    return 0.0;
  }
  const double x = std::abs(z) / epsilon;
  return -sign(z) * 2.0 / (std::exp(2.0 * x) + 1.0);
}

}  // namespace

double chi(double z, double rho) { return chi_jet(z, rho).v; }

Jet1 chi_jet(double z, double rho) {
  const double t = 2.0 - 3.0 * std::abs(z) / rho;
  const Jet1 g = blend(t);
  return {g.v, -3.0 / rho * sign(z) * g.d1, 9.0 / (rho * rho) * g.d2};
}

double Q_eps(double z, const ProfileParams& p) {
  const double c = chi(z, p.rho);
  if (c == 0.0) {
    return sign(z);
  }
  return sign(z) + c * q_minus_sign(z, p.epsilon);
}

Jet1 Q_eps_jet(double z, const ProfileParams& p) {
  const Jet1 c = chi_jet(z, p.rho);
  if (c.v == 0.0 && c.d1 == 0.0 && c.d2 == 0.0) {
    return {sign(z), 0.0, 0.0};
  }
  const Jet1 qe = q_eps_jet(z, p.epsilon);
  const double diff = q_minus_sign(z, p.epsilon);
  return {sign(z) + c.v * diff, qe.d1 * c.v + diff * c.d1,
          qe.d2 * c.v + 2.0 * qe.d1 * c.d1 + diff * c.d2};
}

double c0() { return 4.0 / 3.0; }

double profile_energy_constant() {
  static const double k = integrate_adaptive(
      [](double s) {
        const double d = q_prime(s);
        return s * s * d * d;
      },
      -40.0, 40.0, 1e-14);
  return k;
}

double profile_tail_constant() {
  static const double k = 2.0 * integrate_adaptive(
                                    [](double s) {
                                      const double d = 2.0 / (std::exp(2.0 * s) + 1.0);
                                      return s * d * d;
                                    },
                                    0.0, 40.0, 1e-14);
  return k;
}

double profile_tail_second_moment() {
  static const double k = 2.0 * integrate_adaptive(
                                    [](double s) {
                                      const double d = 2.0 / (std::exp(2.0 * s) + 1.0);
                                      return s * s * d * d;
                                    },
                                    0.0, 40.0, 1e-14);
  return k;
}

FiberGrid FiberGrid::for_epsilon(double rho, double epsilon, int per_epsilon) {
  const double target = epsilon / per_epsilon;
  int n = static_cast<int>(std::ceil(2.0 * rho / target - 1e-9));
  if (n % 2 != 0) {
    ++n;
  }
  return FiberGrid{rho, std::max(n, 4)};
}

std::vector<double> FiberGrid::points() const {
  std::vector<double> out(size());
  for (int i = 0; i < size(); ++i) {
    out[i] = z(i);
  }
  return out;
}

std::vector<double> fiber_derivative(std::span<const double> f, const FiberGrid& g) {
  const int n = static_cast<int>(f.size());
  if (n < 5) {
    throw Error("fiber_derivative: need at least 5 samples");
  }
  const double inv = 1.0 / (12.0 * g.dz());
  std::vector<double> d(n);
  d[0] = (-25 * f[0] + 48 * f[1] - 36 * f[2] + 16 * f[3] - 3 * f[4]) * inv;
  d[1] = (-3 * f[0] - 10 * f[1] + 18 * f[2] - 6 * f[3] + f[4]) * inv;
  for (int i = 2; i < n - 2; ++i) {
    d[i] = (-f[i + 2] + 8 * f[i + 1] - 8 * f[i - 1] + f[i - 2]) * inv;
  }
  d[n - 2] = (3 * f[n - 1] + 10 * f[n - 2] - 18 * f[n - 3] + 6 * f[n - 4] - f[n - 5]) * inv;
  d[n - 1] = (25 * f[n - 1] - 48 * f[n - 2] + 36 * f[n - 3] - 16 * f[n - 4] + 3 * f[n - 5]) * inv;
  return d;
}

double fiber_energy(std::span<const double> v, std::span<const double> dv,
                    const FiberGrid& g, double epsilon) {
  std::vector<double> e(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double w = v[i] * v[i] - 1.0;
    e[i] = 0.5 * epsilon * dv[i] * dv[i] + w * w / (2.0 * epsilon);
  }
  return simpson(e, g.dz());
}

}  // namespace iface
