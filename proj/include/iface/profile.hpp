#pragma once

#include <span>
#include <vector>

namespace iface {

/// Interface width and tube half-width shared by all profile evaluations.
struct ProfileParams {
  double epsilon = 0.05;
  double rho = 0.3;

  /// Checks 0 < epsilon <= 1 and rho > 0; warns when epsilon > rho / 4.
  static ProfileParams make(double epsilon, double rho);
  bool well_separated() const { return epsilon <= rho / 4.0; }
};

/// Value and first two derivatives of a scalar function at a point.
struct Jet1 {
  double v = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

double q(double z);
double q_prime(double z);
double q_eps(double z, double epsilon);
Jet1 q_eps_jet(double z, double epsilon);

/// Smooth even cutoff: 1 on |z| <= rho/3, 0 on |z| >= 2rho/3, monotone in |z|.
double chi(double z, double rho);
Jet1 chi_jet(double z, double rho);

/// Truncated profile q_eps * chi + (1 - chi) * sign.
double Q_eps(double z, const ProfileParams& p);
Jet1 Q_eps_jet(double z, const ProfileParams& p);

/// tau_s f : z -> f(z - s).
template <class F>
auto translate(F f, double s) {
  return [f, s](double z) { return f(z - s); };
}

/// Transition energy of the heteroclinic profile (exactly 4/3).
double c0();
/// K = int s^2 q'(s)^2 ds, the second moment of the profile energy density.
double profile_energy_constant();
/// K2 = 2 int_0^inf s (1 - tanh s)^2 ds.
double profile_tail_constant();
/// K2' = 2 int_0^inf s^2 (1 - tanh s)^2 ds.
double profile_tail_second_moment();

/// Uniform grid on I = (-rho, rho), symmetric about 0, even interval count.
struct FiberGrid {
  double rho = 0.3;
  int intervals = 2;

  static FiberGrid for_epsilon(double rho, double epsilon, int per_epsilon = 16);

  int size() const { return intervals + 1; }
  double dz() const { return 2.0 * rho / intervals; }
  double z(int i) const { return (i - intervals / 2) * dz(); }
  std::vector<double> points() const;
};

/// Samples f on the fiber grid.
template <class F>
std::vector<double> sample_fiber(const FiberGrid& g, F f) {
  std::vector<double> out(g.size());
  for (int i = 0; i < g.size(); ++i) {
    out[i] = f(g.z(i));
  }
  return out;
}

/// Fourth-order finite-difference derivative of fiber samples.
std::vector<double> fiber_derivative(std::span<const double> v, const FiberGrid& g);

/// int_I (eps/2) v'^2 + (1/(2 eps)) (v^2 - 1)^2 by Simpson.
double fiber_energy(std::span<const double> v, std::span<const double> dv,
                    const FiberGrid& g, double epsilon);

}  // namespace iface
