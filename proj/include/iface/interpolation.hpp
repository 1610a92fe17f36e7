#pragma once

#include <array>

namespace iface {

/// Lagrange weights (and their derivatives in units of the node spacing) for
/// N equispaced nodes at offsets first, first+1, ..., first+N-1, evaluated at
/// fractional position theta.
template <int N>
struct LagrangeStencil {
  std::array<double, N> w{};
  std::array<double, N> dw{};
};

template <int N>
LagrangeStencil<N> lagrange_stencil(double theta, int first);

extern template LagrangeStencil<4> lagrange_stencil<4>(double, int);
extern template LagrangeStencil<6> lagrange_stencil<6>(double, int);

}  // namespace iface
