#include "iface/quadrature.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "iface/errors.hpp"

namespace iface {

double simpson(std::span<const double> f, double h) {
  const std::size_t n = f.size();
  if (n < 3 || n % 2 == 0) {
    throw Error("simpson: need an odd number (>= 3) of samples");
  }
  double odd = 0.0;
  double even = 0.0;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (i % 2 == 1) {
      odd += f[i];
    } else {
      even += f[i];
    }
  }
  return h / 3.0 * (f[0] + f[n - 1] + 4.0 * odd + 2.0 * even);
}

std::vector<double> simpson_weights(std::size_t n, double h) {
  if (n < 3 || n % 2 == 0) {
    throw Error("simpson_weights: need an odd number (>= 3) of samples");
  }
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (i == 0 || i == n - 1) {
      w[i] = h / 3.0;
    } else {
      w[i] = (i % 2 == 1 ? 4.0 : 2.0) * h / 3.0;
    }
  }
  return w;
}

double periodic_trapezoid(std::span<const double> f, double period) {
  if (f.empty()) {
    return 0.0;
  }
  double s = 0.0;
  for (double v : f) {
    s += v;
  }
  return s * period / static_cast<double>(f.size());
}

double integrate_adaptive(const std::function<double(double)>& f, double a,
                          double b, double tol) {
  using boost::math::quadrature::gauss_kronrod;
  double error = 0.0;
  return gauss_kronrod<double, 31>::integrate(f, a, b, 25, tol, &error);
}

}  // namespace iface
