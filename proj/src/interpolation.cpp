#include "iface/interpolation.hpp"

namespace iface {

template <int N>
LagrangeStencil<N> lagrange_stencil(double theta, int first) {
  LagrangeStencil<N> s;
  std::array<double, N> node{};
  for (int k = 0; k < N; ++k) {
    node[k] = static_cast<double>(first + k);
  }
  for (int k = 0; k < N; ++k) {
    double denom = 1.0;
    for (int m = 0; m < N; ++m) {
      if (m != k) {
        denom *= node[k] - node[m];
      }
    }
    double prod = 1.0;
    double dprod = 0.0;
    for (int m = 0; m < N; ++m) {
      if (m == k) {
        continue;
      }
      const double f = theta - node[m];
      dprod = dprod * f + prod;
      prod *= f;
    }
    s.w[k] = prod / denom;
    s.dw[k] = dprod / denom;
  }
  return s;
}

template LagrangeStencil<4> lagrange_stencil<4>(double, int);
template LagrangeStencil<6> lagrange_stencil<6>(double, int);

}  // namespace iface
