#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace iface {

/// Composite Simpson rule on uniform samples; `f.size()` must be odd and >= 3.
double simpson(std::span<const double> f, double h);

/// Weights w_i such that sum_i w_i f_i equals simpson(f, h).
std::vector<double> simpson_weights(std::size_t n, double h);

/// Trapezoid rule for a periodic function sampled at n equispaced points
/// (no repeated endpoint). Spectrally accurate for smooth integrands.
double periodic_trapezoid(std::span<const double> f, double period);

/// Adaptive Gauss-Kronrod integration of f over [a, b].
double integrate_adaptive(const std::function<double(double)>& f, double a,
                          double b, double tol = 1e-13);

}  // namespace iface
