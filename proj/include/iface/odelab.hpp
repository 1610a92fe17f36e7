#pragma once

#include <functional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "iface/profile.hpp"

namespace iface {

/// Uniform grid on the truncated line [-Z, Z] with a node at 0.
struct OdeLine {
  double Z = 40.0;
  double dz = 1e-3;

  int size() const;
  int zero_index() const { return size() / 2; }
  double z(int i) const { return (i - zero_index()) * dz; }
  std::vector<double> points() const;
};

/// Fourth-order derivative of line samples (one-sided near the ends).
std::vector<double> line_derivative(std::span<const double> w, const OdeLine& line);
double line_l2(std::span<const double> w, const OdeLine& line);
/// (int w^2 + w'^2)^(1/2).
double line_h1(std::span<const double> w, const OdeLine& line);
double line_linf(std::span<const double> w);

/// The embedding ||w||_inf^2 <= (1/2) ||w||_{H1}^2 on the line.
struct SobolevCheck {
  double linf_sq = 0.0;
  double h1_sq = 0.0;
  bool holds = false;
};
SobolevCheck sobolev_check(std::span<const double> w, const OdeLine& line);

/// h = v' - (1 - v^2) / eps on the fiber.
std::vector<double> compute_h(std::span<const double> v, const FiberGrid& g, double epsilon);

/// Zero of v in [-rho/2, rho/2] closest to the fiber centre. Throws NoZeroCrossing.
double find_zero(std::span<const double> v, const FiberGrid& g);

struct RescaledProfile {
  std::vector<double> w;
  std::vector<double> h;
};

/// w(z) = w_eps(s0 + eps z), h(z) = eps h_eps(s0 + eps z). With this
/// convention w(0) = w_eps(s0) and ||w_eps||_{H1_eps} = ||w||_{H1}.
RescaledProfile rescale(const std::function<double(double)>& w_eps,
                        const std::function<double(double)>& h_eps, double epsilon, double s0,
                        const OdeLine& line);

/// Rescales w_eps = v - tau_{s0} q_eps and h_eps from a fiber; both are set
/// to zero outside I.
RescaledProfile rescale_fiber(std::span<const double> v, const FiberGrid& g, double epsilon,
                              double s0, const OdeLine& line);

/// w1(s) = exp(-Phi(s)) int_0^s exp(Phi(t)) h(t) dt with Phi = int_0^s (2q + w0).
/// Throws HypothesisViolated when ||w0||_{H1} > w0_bound.
std::vector<double> apply_S(std::span<const double> w0, std::span<const double> h,
                            const OdeLine& line, double w0_bound = 1.4142135623730951);

/// max |w1' + (2q + w0) w1 - h| over the line: the equation S(w0) solves.
double linearized_residual(std::span<const double> w1, std::span<const double> w0,
                           std::span<const double> h, const OdeLine& line);

/// max |w' + (2q + w) w - h| over the line.
double ode_residual(std::span<const double> w, std::span<const double> h, const OdeLine& line);

struct FixedPointReport {
  std::vector<double> w;
  double h_norm = 0.0;  // ||h||_{L2}
  double w_h1 = 0.0;
  int iterations = 0;
  std::vector<double> factors;  // ||w_{n+1} - w_n|| / ||w_n - w_{n-1}|| in H1
  double residual = 0.0;
  SobolevCheck sobolev;
};

/// Picard iteration w <- S(w) from w = 0 until the H1 increment drops below
/// tol. Throws HypothesisViolated if ||h||_{L2} > alpha0 and NoContraction
/// when an increment fails to shrink.
FixedPointReport fixed_point(std::span<const double> h, const OdeLine& line, double tol = 1e-13,
                             int max_iter = 100, double alpha0 = 0.05);

struct CoercivityOptions {
  double C = 20.0;
  double c = 1.0;
  double c2 = 0.05;       // largest admissible theta_2
  double tol_quad = 1e-8;
};

struct CoercivityReport {
  double lhs = 0.0;       // int (sqrt(eps) v' - (1 - v^2)/sqrt(eps))^2
  double theta1 = 0.0;
  double theta2 = 0.0;
  double rhs = 0.0;       // C theta1 + C exp(-c/eps)
  double ratio = 0.0;     // lhs / theta1 (0 when theta1 vanishes)
  double energy_gap = 0.0;  // int (eps/2) v'^2 + (v^2-1)^2/(2eps) - c0
  bool inequality_holds = false;
  bool energy_bound_holds = false;
};

/// Throws HypothesisFailed when theta_2(v) > c2.
CoercivityReport coercivity_check(std::span<const double> v, const FiberGrid& g, double epsilon,
                                  const CoercivityOptions& opt = {});

nlohmann::json to_json(const FixedPointReport& r);
nlohmann::json to_json(const CoercivityReport& r);

}  // namespace iface
