#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "pgsa/error.hpp"

namespace pgsa {

namespace detail {
/// Index i such that x lies in [nodes[i], nodes[i+1]]; clamps to the ends.
inline std::size_t locate(const std::vector<double>& nodes, double x) {
  const auto it = std::upper_bound(nodes.begin(), nodes.end(), x);
  const auto i = static_cast<std::ptrdiff_t>(it - nodes.begin()) - 1;
  return static_cast<std::size_t>(
      std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(nodes.size()) - 2));
}
}  // namespace detail

/// Shape-preserving piecewise cubic Hermite interpolant: three-point parabolic
/// slopes passed through Hyman's monotonicity filter, end slopes as in MATLAB
/// pchip. Monotone wherever the data is, and exact for quadratics away from
/// data extrema.
class MonotoneCubic {
 public:
  MonotoneCubic() = default;

  MonotoneCubic(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n) throw Error(ErrorKind::InvalidParams, "pchip needs >= 2 points");
    slope_.assign(n, 0.0);
    std::vector<double> h(n - 1), d(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      h[i] = x_[i + 1] - x_[i];
      if (!(h[i] > 0.0)) throw Error(ErrorKind::InvalidParams, "pchip nodes must increase");
      d[i] = (y_[i + 1] - y_[i]) / h[i];
    }
    if (n == 2) {
      slope_[0] = slope_[1] = d[0];
      return;
    }
    for (std::size_t i = 1; i + 1 < n; ++i) {
      double s = (h[i] * d[i - 1] + h[i - 1] * d[i]) / (h[i - 1] + h[i]);
      const double cap = 3.0 * std::min(std::abs(d[i - 1]), std::abs(d[i]));
      if (d[i - 1] * d[i] > 0.0) {
        s = std::copysign(std::min(std::abs(s), cap), d[i]);
      } else {
        s = std::copysign(std::min(std::abs(s), cap), s);
      }
      slope_[i] = s;
    }
    slope_[0] = end_slope(h[0], h[1], d[0], d[1]);
    slope_[n - 1] = end_slope(h[n - 2], h[n - 3], d[n - 2], d[n - 3]);
  }

  double operator()(double x) const {
    const std::size_t i = detail::locate(x_, x);
    const double h = x_[i + 1] - x_[i];
    const double t = (x - x_[i]) / h;
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * y_[i] + (t3 - 2 * t2 + t) * h * slope_[i] +
           (-2 * t3 + 3 * t2) * y_[i + 1] + (t3 - t2) * h * slope_[i + 1];
  }

  const std::vector<double>& nodes() const { return x_; }
  const std::vector<double>& values() const { return y_; }

 private:
  static double end_slope(double h0, double h1, double d0, double d1) {
    double s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if (s * d0 <= 0.0)
      s = 0.0;
    else if (d0 * d1 <= 0.0 && std::abs(s) > std::abs(3.0 * d0))
      s = 3.0 * d0;
    return s;
  }

  std::vector<double> x_, y_, slope_;
};

/// C2 cubic spline with not-a-knot end conditions, evaluable with its first
/// derivative. Needs at least four nodes.
class CubicSpline {
 public:
  CubicSpline() = default;

  CubicSpline(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 4 || y_.size() != n)
      throw Error(ErrorKind::InvalidParams, "spline needs >= 4 points");
    const std::size_t m = n - 1;  // intervals
    std::vector<double> h(m), d(m);
    for (std::size_t i = 0; i < m; ++i) {
      h[i] = x_[i + 1] - x_[i];
      if (!(h[i] > 0.0)) throw Error(ErrorKind::InvalidParams, "spline nodes must increase");
      d[i] = (y_[i + 1] - y_[i]) / h[i];
    }
    // Unknowns M_1..M_{m-1}; M_0 and M_m eliminated by the not-a-knot rows.
    const std::size_t k = m - 1;
    std::vector<double> lo(k, 0.0), di(k, 0.0), up(k, 0.0), rhs(k, 0.0);
    for (std::size_t r = 0; r < k; ++r) {
      const std::size_t i = r + 1;
      lo[r] = h[i - 1];
      di[r] = 2.0 * (h[i - 1] + h[i]);
      up[r] = h[i];
      rhs[r] = 6.0 * (d[i] - d[i - 1]);
    }
    di[0] += h[0] * (h[0] + h[1]) / h[1];
    up[0] -= h[0] * h[0] / h[1];
    di[k - 1] += h[m - 1] * (h[m - 1] + h[m - 2]) / h[m - 2];
    lo[k - 1] -= h[m - 1] * h[m - 1] / h[m - 2];
    // Thomas algorithm.
    for (std::size_t r = 1; r < k; ++r) {
      const double f = lo[r] / di[r - 1];
      di[r] -= f * up[r - 1];
      rhs[r] -= f * rhs[r - 1];
    }
    curv_.assign(n, 0.0);
    curv_[k] = rhs[k - 1] / di[k - 1];
    for (std::size_t r = k - 1; r-- > 0;) curv_[r + 1] = (rhs[r] - up[r] * curv_[r + 2]) / di[r];
    curv_[0] = ((h[0] + h[1]) * curv_[1] - h[0] * curv_[2]) / h[1];
    curv_[m] = ((h[m - 1] + h[m - 2]) * curv_[m - 1] - h[m - 1] * curv_[m - 2]) / h[m - 2];
  }

  double operator()(double x) const { return value(detail::locate(x_, x), x); }
  double derivative(double x) const { return deriv(detail::locate(x_, x), x); }

  /// Value and derivative on a known interval; lets callers sharing a mesh
  /// locate once for many splines.
  double value(std::size_t i, double x) const {
    const double h = x_[i + 1] - x_[i];
    const double t = x - x_[i];
    const double b = (y_[i + 1] - y_[i]) / h - h * (2.0 * curv_[i] + curv_[i + 1]) / 6.0;
    return y_[i] + t * (b + t * (0.5 * curv_[i] + t * (curv_[i + 1] - curv_[i]) / (6.0 * h)));
  }
  double deriv(std::size_t i, double x) const {
    const double h = x_[i + 1] - x_[i];
    const double t = x - x_[i];
    const double b = (y_[i + 1] - y_[i]) / h - h * (2.0 * curv_[i] + curv_[i + 1]) / 6.0;
    return b + t * (curv_[i] + t * (curv_[i + 1] - curv_[i]) / (2.0 * h));
  }

  const std::vector<double>& nodes() const { return x_; }
  const std::vector<double>& values() const { return y_; }

 private:
  std::vector<double> x_, y_, curv_;
};

}  // namespace pgsa
