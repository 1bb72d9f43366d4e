#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <vector>

namespace pgsa::quad {

/// 8-point Gauss-Legendre rule on [-1,1].
struct GaussLegendre8 {
  static constexpr std::array<double, 8> nodes = {
      -0.9602898564975362316835609, -0.7966664774136267395915539,
      -0.5255324099163289858177390, -0.1834346424956498049394761,
      0.1834346424956498049394761,  0.5255324099163289858177390,
      0.7966664774136267395915539,  0.9602898564975362316835609};
  static constexpr std::array<double, 8> weights = {
      0.1012285362903762591525314, 0.2223810344533744705443560,
      0.3137066458778872873379622, 0.3626837833783619829651504,
      0.3626837833783619829651504, 0.3137066458778872873379622,
      0.2223810344533744705443560, 0.1012285362903762591525314};
};

/// Single 8-point panel on [lo,hi].
template <typename F>
double gauss8(F&& f, double lo, double hi) {
  const double half = 0.5 * (hi - lo);
  const double mid = 0.5 * (hi + lo);
  double s = 0.0;
  for (std::size_t q = 0; q < 8; ++q)
    s += GaussLegendre8::weights[q] * f(mid + half * GaussLegendre8::nodes[q]);
  return s * half;
}

/// Composite rule over `panels` equal panels.
template <typename F>
double composite(F&& f, double lo, double hi, int panels) {
  const double h = (hi - lo) / panels;
  double s = 0.0;
  for (int i = 0; i < panels; ++i) s += gauss8(f, lo + i * h, lo + (i + 1) * h);
  return s;
}

namespace detail {
template <typename F>
double adapt(F& f, double lo, double hi, double whole, double tol, int depth) {
  const double mid = 0.5 * (lo + hi);
  const double left = gauss8(f, lo, mid);
  const double right = gauss8(f, mid, hi);
  const double refined = left + right;
  if (depth <= 0 || std::abs(refined - whole) <= tol) return refined;
  return adapt(f, lo, mid, left, 0.5 * tol, depth - 1) +
         adapt(f, mid, hi, right, 0.5 * tol, depth - 1);
}
}  // namespace detail

/// Adaptive composite Gauss-Legendre. The interval is pre-split into
/// `initial_panels`; each panel is bisected until the change between the panel
/// and its two halves is below its share of rel_tol * |integral|.
template <typename F>
double adaptive(F&& f, double lo, double hi, double rel_tol = 1e-12, int initial_panels = 16,
                int max_depth = 30, double abs_floor = 1e-300) {
  if (hi <= lo) return 0.0;
  const double h = (hi - lo) / initial_panels;
  std::vector<double> coarse(initial_panels);
  double rough = 0.0;
  for (int i = 0; i < initial_panels; ++i) {
    const double b = (i + 1 == initial_panels) ? hi : lo + (i + 1) * h;
    coarse[i] = gauss8(f, lo + i * h, b);
    rough += std::abs(coarse[i]);
  }
  const double tol = std::max(rel_tol * rough, abs_floor) / initial_panels;
  double s = 0.0;
  for (int i = 0; i < initial_panels; ++i) {
    const double b = (i + 1 == initial_panels) ? hi : lo + (i + 1) * h;
    s += detail::adapt(f, lo + i * h, b, coarse[i], tol, max_depth);
  }
  return s;
}

/// Adaptive integration with user-specified breakpoints (sorted, inside [lo,hi]).
template <typename F>
double adaptive_with_breaks(F&& f, double lo, double hi, const std::vector<double>& breaks,
                            double rel_tol = 1e-12) {
  double s = 0.0;
  double a = lo;
  for (double b : breaks) {
    if (b <= a || b >= hi) continue;
    s += adaptive(f, a, b, rel_tol);
    a = b;
  }
  return s + adaptive(f, a, hi, rel_tol);
}

}  // namespace pgsa::quad
