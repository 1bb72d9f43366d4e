#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "pgsa/error.hpp"
#include "pgsa/interp.hpp"
#include "pgsa/measures.hpp"
#include "pgsa/quadrature.hpp"
#include "pgsa/rk4.hpp"

namespace pgsa {

/// A positive weight on (a,b). Constant and grid-backed weights are what the
/// experiment runner produces; Analytic wraps any user callable.
class Weight1D {
 public:
  enum class Kind { Constant, GridBacked, Analytic };

  static Weight1D constant(double c) {
    Weight1D w;
    w.kind_ = Kind::Constant;
    w.value_ = c;
    return w;
  }

  static Weight1D grid(std::vector<double> x, std::vector<double> values,
                       std::vector<double> product = {}) {
    Weight1D w;
    w.kind_ = Kind::GridBacked;
    w.grid_ = std::make_shared<const MonotoneCubic>(std::move(x), std::move(values));
    w.product_ = std::move(product);
    return w;
  }

  static Weight1D analytic(std::function<double(double)> f, std::string label = "analytic") {
    Weight1D w;
    w.kind_ = Kind::Analytic;
    w.fn_ = std::move(f);
    w.label_ = std::move(label);
    return w;
  }

  Kind kind() const { return kind_; }

  double operator()(double x) const {
    switch (kind_) {
      case Kind::Constant: return value_;
      case Kind::GridBacked: return scale_ * (*grid_)(x);
      case Kind::Analytic: return scale_ * fn_(x);
    }
    return 0.0;
  }

  /// p = w * rho, the coefficient of the Sturm-Liouville operator.
  double product(const Measure1D& mu, double x) const { return (*this)(x) * mu.pdf(x); }

  /// c * w; eigenvalues of the associated basis scale by c.
  Weight1D scaled(double c) const {
    if (!(c > 0.0)) throw Error(ErrorKind::NonPositive, "weight scale must be > 0");
    Weight1D w = *this;
    if (kind_ == Kind::Constant)
      w.value_ *= c;
    else
      w.scale_ *= c;
    return w;
  }

  double constant_value() const { return value_; }
  const std::vector<double>& grid_nodes() const { return grid_->nodes(); }
  const std::vector<double>& grid_values() const { return grid_->values(); }
  /// Nodal (w rho) values from the ODE solve, when available.
  const std::vector<double>& grid_products() const { return product_; }

  std::string label() const {
    switch (kind_) {
      case Kind::Constant: return "constant";
      case Kind::GridBacked: return "wlin";
      case Kind::Analytic: return label_;
    }
    return "?";
  }

 private:
  Kind kind_ = Kind::Constant;
  double value_ = 1.0;
  double scale_ = 1.0;
  std::shared_ptr<const MonotoneCubic> grid_;
  std::vector<double> product_;
  std::function<double(double)> fn_;
  std::string label_;
};

inline Weight1D constant_weight(double c) {
  if (!(c > 0.0) || !std::isfinite(c)) throw Error(ErrorKind::NonPositive, "constant weight must be > 0");
  return Weight1D::constant(c);
}

/// Linear-preserving weight (Stein kernel)
///   w_lin(x) = -(1/rho(x)) int_a^x (y - m) rho(y) dy.
/// (w rho) is obtained by RK4 on (w rho)' = -(x - m) rho. The forward sweep from
/// a is used left of the mean and a backward sweep from b (where w rho also
/// vanishes) right of it, so tail nodes never see cancellation. Nodal values are
/// then divided by rho; endpoints where rho < 1e-13 get a quadratic
/// extrapolation from the three nearest interior nodes.
inline Weight1D wlin_compute(const Measure1D& mu, std::size_t n_steps = 4000) {
  if (n_steps < 100) throw Error(ErrorKind::InvalidParams, "wlin needs n_steps >= 100");
  const double a = mu.a(), b = mu.b(), m = mu.mean();
  const double h = (b - a) / static_cast<double>(n_steps);
  auto rhs = [&](double x, double) { return -(x - m) * mu.pdf(x); };
  const auto fwd = rk4_scalar(rhs, a, 0.0, h, n_steps);
  const auto bwd = rk4_scalar(rhs, b, 0.0, -h, n_steps);  // bwd[j] at b - j h

  std::vector<double> x(n_steps + 1), p(n_steps + 1), w(n_steps + 1);
  for (std::size_t i = 0; i <= n_steps; ++i) {
    x[i] = (i == n_steps) ? b : a + static_cast<double>(i) * h;
    p[i] = (x[i] <= m) ? fwd[i] : bwd[n_steps - i];
  }
  p.front() = 0.0;
  p.back() = 0.0;
  for (std::size_t i = 0; i <= n_steps; ++i) {
    const double rho = mu.pdf(x[i]);
    if (rho >= 1e-13) {
      w[i] = p[i] / rho;
      continue;
    }
    if (i != 0 && i != n_steps)
      throw Error(ErrorKind::DivisionBlowup,
                  "interior density below 1e-13 at x=" + std::to_string(x[i]));
    w[i] = std::numeric_limits<double>::quiet_NaN();  // filled below
  }
  auto extrapolate = [&](std::size_t at, std::size_t n1, std::size_t n2, std::size_t n3) {
    // Lagrange quadratic through (x_n1, w_n1), (x_n2, w_n2), (x_n3, w_n3).
    const double t = x[at];
    const double l1 = (t - x[n2]) * (t - x[n3]) / ((x[n1] - x[n2]) * (x[n1] - x[n3]));
    const double l2 = (t - x[n1]) * (t - x[n3]) / ((x[n2] - x[n1]) * (x[n2] - x[n3]));
    const double l3 = (t - x[n1]) * (t - x[n2]) / ((x[n3] - x[n1]) * (x[n3] - x[n2]));
    return std::max(0.0, l1 * w[n1] + l2 * w[n2] + l3 * w[n3]);
  };
  if (std::isnan(w.front())) w.front() = extrapolate(0, 1, 2, 3);
  if (std::isnan(w.back())) w.back() = extrapolate(n_steps, n_steps - 1, n_steps - 2, n_steps - 3);
  return Weight1D::grid(std::move(x), std::move(w), std::move(p));
}

/// Writes "x,w" rows for a grid-backed weight.
inline void export_weight_csv(const Weight1D& w, std::ostream& os) {
  if (w.kind() != Weight1D::Kind::GridBacked)
    throw Error(ErrorKind::InvalidParams, "only grid-backed weights export to CSV");
  os.precision(17);
  os << "x,w\n";
  const auto& x = w.grid_nodes();
  const auto& v = w.grid_values();
  for (std::size_t i = 0; i < x.size(); ++i) os << x[i] << ',' << v[i] << '\n';
}

enum class Verdict { Holds, Diverges, Inconclusive };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Holds: return "holds";
    case Verdict::Diverges: return "diverges";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "?";
}

struct ConditionProbe {
  Verdict verdict = Verdict::Inconclusive;
  double estimate = 0.0;              // integral over the innermost truncated interval
  std::vector<double> level_values;  // integral at each endpoint cut-off level
};

struct ExistenceReport {
  ConditionProbe cond_i;   // 1/(w rho) in L1(a,b)
  ConditionProbe cond_ii;  // primitives of 1/(w rho) in L2(mu)
  bool conclusive() const {
    return cond_i.verdict == Verdict::Holds || cond_ii.verdict == Verdict::Holds ||
           (cond_i.verdict == Verdict::Diverges && cond_ii.verdict == Verdict::Diverges);
  }
};

namespace detail {

/// Classifies a monotone sequence of truncated integrals I_k (cut-off 10^-k
/// from each endpoint). The increments of a convergent improper integral decay
/// geometrically; a log or power divergence gives increments that do not
/// decay. Verdict is drawn from the last six increments.
inline Verdict classify_levels(const std::vector<double>& levels) {
  std::vector<double> inc;
  for (std::size_t k = 1; k < levels.size(); ++k) inc.push_back(levels[k] - levels[k - 1]);
  const double scale = std::abs(levels.back());
  if (!std::isfinite(scale)) return Verdict::Diverges;
  const std::size_t window = 6;
  if (inc.size() < window + 1) return Verdict::Inconclusive;
  bool all_fast = true, all_flat = true;
  for (std::size_t k = inc.size() - window; k < inc.size(); ++k) {
    const double prev = inc[k - 1], cur = inc[k];
    if (std::abs(cur) <= 1e-14 * scale) continue;  // numerically converged layer
    all_flat = all_flat && std::abs(cur) >= 0.9 * std::abs(prev);
    all_fast = all_fast && std::abs(cur) <= 0.5 * std::abs(prev);
  }
  if (all_fast) return Verdict::Holds;
  if (all_flat) return Verdict::Diverges;
  return Verdict::Inconclusive;
}

}  // namespace detail

/// Numerical probe of the two sufficient existence conditions for the
/// weighted Poincare basis. Both integrals are computed on [a + e_k, b - e_k]
/// with e_k = (b - a) 10^-k / 2, k = 1..levels, using geometric panels (four
/// per decade) toward each end; the primitive R is anchored at the midpoint.
inline ExistenceReport check_existence(const Measure1D& mu, const Weight1D& w, int levels = 12) {
  const double a = mu.a(), b = mu.b(), half = 0.5 * (b - a);
  auto g = [&](double x) {
    const double p = w.product(mu, x);
    return p > 0.0 ? 1.0 / p : std::numeric_limits<double>::infinity();
  };
  constexpr int per_decade = 4;
  const int n_panels = levels * per_decade;
  // Panel j on the right half spans [b - half*10^{-j/4}, b - half*10^{-(j+1)/4}]
  // (j=0 starts at c). Left half mirrors it.
  auto edge = [&](int j, int side) {
    const double off = half * std::pow(10.0, -static_cast<double>(j) / per_decade);
    return side > 0 ? b - off : a + off;
  };
  std::vector<double> l1(levels, 0.0), l2(levels, 0.0);
  for (int side : {-1, +1}) {
    double r_start = 0.0, acc1 = 0.0, acc2 = 0.0;
    for (int j = 0; j < n_panels; ++j) {
      double lo = edge(j, side), hi = edge(j + 1, side);
      const double sign = side > 0 ? 1.0 : -1.0;
      if (lo > hi) std::swap(lo, hi);
      const double from = side > 0 ? lo : hi;  // R runs outward from c
      const double len = hi - lo;
      constexpr int sub = 4;
      double panel1 = 0.0, panel2 = 0.0, r_here = r_start;
      for (int s = 0; s < sub; ++s) {
        const double sa = side > 0 ? from + len * s / sub : from - len * (s + 1) / sub;
        const double sb = sa + len / sub;
        panel1 += quad::gauss8(g, sa, sb);
        // R at the Gauss points of this sub-panel, measured from the side's start.
        const double anchor_lo = side > 0 ? sa : sb;
        const double r_anchor = r_here;
        panel2 += quad::gauss8(
            [&](double x) {
              const double r = r_anchor + sign * quad::gauss8(g, std::min(anchor_lo, x),
                                                               std::max(anchor_lo, x));
              return r * r * mu.pdf(x);
            },
            sa, sb);
        r_here += sign * quad::gauss8(g, sa, sb);
      }
      r_start = r_here;
      acc1 += panel1;
      acc2 += panel2;
      if ((j + 1) % per_decade == 0) {
        const int level = (j + 1) / per_decade - 1;
        l1[level] += acc1;
        l2[level] += acc2;
      }
    }
  }
  ExistenceReport rep;
  rep.cond_i.level_values = l1;
  rep.cond_ii.level_values = l2;
  rep.cond_i.estimate = l1.back();
  rep.cond_ii.estimate = l2.back();
  rep.cond_i.verdict = detail::classify_levels(l1);
  rep.cond_ii.verdict = detail::classify_levels(l2);
  return rep;
}

}  // namespace pgsa
