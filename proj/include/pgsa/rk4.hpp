#pragma once

#include <cstddef>
#include <vector>

namespace pgsa {

/// Classical fourth-order Runge-Kutta for a scalar IVP y' = f(x, y) on a
/// uniform grid. Returns the nodal solution y(x_0), ..., y(x_n) where
/// x_i = x0 + i*h. A negative h integrates backward.
template <typename F>
std::vector<double> rk4_scalar(F&& f, double x0, double y0, double h, std::size_t steps) {
  std::vector<double> y(steps + 1);
  y[0] = y0;
  double yi = y0;
  for (std::size_t i = 0; i < steps; ++i) {
    const double x = x0 + static_cast<double>(i) * h;
    const double k1 = f(x, yi);
    const double k2 = f(x + 0.5 * h, yi + 0.5 * h * k1);
    const double k3 = f(x + 0.5 * h, yi + 0.5 * h * k2);
    const double k4 = f(x + h, yi + h * k3);
    yi += h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
    y[i + 1] = yi;
  }
  return y;
}

}  // namespace pgsa
