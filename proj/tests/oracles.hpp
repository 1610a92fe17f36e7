#pragma once

#include <algorithm>
#include <cmath>

#include "iface/wave.hpp"

namespace testing {

/// Discrete L2 error at t_final of the leapfrog solution started from the
/// boosted kink tanh(gamma (x1 - c t) / eps), on a pseudo one-dimensional
/// strip with spacing h. The time step is tied to h so that both errors
/// shrink together under refinement.
inline double boosted_kink_error(double eps, double c, double h, double t_final, int steps) {
  using namespace iface;
  const double gamma = 1.0 / std::sqrt(1.0 - c * c);
  GridSpec g;
  g.L = 2.0;
  g.h = h;
  g.dt = t_final / steps;
  g.t_start = 0.0;
  g.t_end = t_final;
  g.boundary = BoundaryMode::periodic_x2_strip;
  g.strip_ny = 4;
  g.validate(eps);
  const int nx = g.nx();
  InitialData d{Array2(nx, g.ny()), Array2(nx, g.ny())};
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < nx; ++i) {
      const double s = gamma * g.x1(i) / eps;
      const double sech = 1.0 / std::cosh(s);
      d.u(i, j) = std::tanh(s);
      d.u_t(i, j) = -c * gamma / eps * sech * sech;
    }
  }
  SpacetimeField f = start_field(d, g, eps, 1.0);
  while (f.level < steps) {
    step(f);
  }
  double sum = 0.0;
  const int j = 1;
  for (int i = 0; i < nx; ++i) {
    const double exact = std::tanh(gamma * (g.x1(i) - c * f.t) / eps);
    const double e = f.u_curr(i, j) - exact;
    sum += e * e;
  }
  return std::sqrt(sum * h);
}

/// Error ratio of the boosted kink under one halving of h (and dt).
inline double boosted_kink_ratio(double eps = 0.1, double c = 0.3, double t_final = 0.5) {
  const double h = eps / 8.0;
  const double dt_max = std::min(iface::GridSpec::cfl_safety * h / std::sqrt(2.0), 0.2 * eps);
  const int steps = static_cast<int>(std::ceil(t_final / dt_max));
  const double coarse = boosted_kink_error(eps, c, h, t_final, steps);
  const double fine = boosted_kink_error(eps, c, h / 2.0, t_final, 2 * steps);
  return coarse / fine;
}

}  // namespace testing
