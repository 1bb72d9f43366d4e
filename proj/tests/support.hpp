#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "pgsa/quadrature.hpp"
#include "pgsa/spectral.hpp"

namespace pgsa::test {

/// Gauss-8 on every mesh element; exact enough for products of splines.
inline double mesh_integral(const Mesh1D& mesh, const std::function<double(double)>& f) {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < mesh.nodes.size(); ++i) s += quad::gauss8(f, mesh.nodes[i], mesh.nodes[i + 1]);
  return s;
}

inline double l2_inner(const PoincareBasis1D& B, std::size_t i, std::size_t j) {
  const auto& mu = B.measure();
  return mesh_integral(B.mesh(), [&](double x) { return B.eval(i, x) * B.eval(j, x) * mu.pdf(x); });
}

inline double h1_inner(const PoincareBasis1D& B, std::size_t i, std::size_t j) {
  const auto& mu = B.measure();
  return mesh_integral(B.mesh(), [&](double x) {
    return B.weight()(x) * B.eval_deriv(i, x) * B.eval_deriv(j, x) * mu.pdf(x);
  });
}

/// Normalized Legendre polynomial sqrt(2j+1) P_j on U(-1,1).
inline double legendre_normalized(int j, double x) {
  double p0 = 1.0, p1 = x;
  if (j == 0) return 1.0;
  for (int n = 1; n < j; ++n) {
    const double p2 = ((2.0 * n + 1.0) * x * p1 - n * p0) / (n + 1.0);
    p0 = p1;
    p1 = p2;
  }
  return std::sqrt(2.0 * j + 1.0) * p1;
}

inline int sign_changes(const std::vector<double>& v, double tol) {
  int changes = 0, last = 0;
  for (double x : v) {
    if (std::abs(x) <= tol) continue;
    const int s = x > 0 ? 1 : -1;
    if (last != 0 && s != last) ++changes;
    last = s;
  }
  return changes;
}

}  // namespace pgsa::test
