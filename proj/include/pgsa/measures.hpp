#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pgsa/error.hpp"
#include "pgsa/quadrature.hpp"
#include "pgsa/rng.hpp"

namespace pgsa {

enum class Family { Uniform, Triangular, TruncatedGaussian, TruncatedGumbel, TruncatedExponential };

inline const char* to_string(Family f) {
  switch (f) {
    case Family::Uniform: return "uniform";
    case Family::Triangular: return "triangular";
    case Family::TruncatedGaussian: return "gaussian";
    case Family::TruncatedGumbel: return "gumbel";
    case Family::TruncatedExponential: return "exponential";
  }
  return "?";
}

inline Family family_from_string(const std::string& s) {
  if (s == "uniform") return Family::Uniform;
  if (s == "triangular") return Family::Triangular;
  if (s == "gaussian" || s == "normal") return Family::TruncatedGaussian;
  if (s == "gumbel") return Family::TruncatedGumbel;
  if (s == "exponential") return Family::TruncatedExponential;
  throw Error(ErrorKind::InvalidParams, "unknown family '" + s + "'");
}

/// A continuous probability measure on a bounded interval [a,b], stored as a
/// parent distribution renormalized to the interval.
///
/// Parameters by family:
///   Uniform               {lo, hi}
///   Triangular            {lo, mode, hi}
///   TruncatedGaussian     {mean, variance}
///   TruncatedGumbel       {location, scale}   pdf (1/s) exp(-(z + e^-z)), z = (x-loc)/s
///   TruncatedExponential  {rate}              parent support [0, inf)
class Measure1D {
 public:
  Family family() const { return family_; }
  const std::vector<double>& params() const { return params_; }
  double a() const { return a_; }
  double b() const { return b_; }
  double mean() const { return mean_; }
  /// Parent mass of [a,b]; 1 for untruncated families.
  double normalizer() const { return mass_; }

  double pdf(double x) const {
    if (x < a_ || x > b_) return 0.0;
    return parent_pdf(x) / mass_;
  }

  double cdf(double x) const {
    if (x <= a_) return 0.0;
    if (x >= b_) return 1.0;
    return std::clamp(parent_mass(a_, x) / mass_, 0.0, 1.0);
  }

  /// Inverse CDF to ~1e-12 absolute in u. Closed-form start where the parent
  /// has one, then safeguarded Newton on the bracket.
  double quantile(double u) const {
    if (!(u >= 0.0 && u <= 1.0)) throw Error(ErrorKind::InvalidParams, "quantile: u outside [0,1]");
    if (u == 0.0) return a_;
    if (u == 1.0) return b_;
    double lo = a_, hi = b_;
    double x = initial_quantile(u);
    if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
      const double r = cdf(x) - u;
      if (r == 0.0) return x;
      if (r > 0.0)
        hi = x;
      else
        lo = x;
      const double p = pdf(x);
      double next = (p > 0.0) ? x - r / p : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (std::abs(next - x) <= 1e-15 * std::max(1.0, std::abs(x)) || hi - lo <= 1e-15 * std::max(1.0, std::abs(x)))
        return next;
      x = next;
    }
    return x;
  }

  /// Interior points where the density has a kink (for quadrature splitting).
  std::vector<double> breakpoints() const {
    if (family_ == Family::Triangular) return {params_[1]};
    return {};
  }

  /// Lower bound on the density over the support, ignoring endpoints where it
  /// may vanish. Used to flag near-zero densities.
  bool vanishes_at_a() const { return parent_pdf(a_) / mass_ < 1e-13; }
  bool vanishes_at_b() const { return parent_pdf(b_) / mass_ < 1e-13; }

  friend Measure1D make_measure(Family, std::vector<double>, std::optional<std::pair<double, double>>);

 private:
  double parent_pdf(double x) const {
    switch (family_) {
      case Family::Uniform: return 1.0 / (params_[1] - params_[0]);
      case Family::Triangular: {
        const double lo = params_[0], c = params_[1], hi = params_[2];
        if (x <= c) return 2.0 * (x - lo) / ((hi - lo) * (c - lo));
        return 2.0 * (hi - x) / ((hi - lo) * (hi - c));
      }
      case Family::TruncatedGaussian: {
        const double sd = std::sqrt(params_[1]);
        const double z = (x - params_[0]) / sd;
        return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * M_PI));
      }
      case Family::TruncatedGumbel: {
        const double z = (x - params_[0]) / params_[1];
        return std::exp(-(z + std::exp(-z))) / params_[1];
      }
      case Family::TruncatedExponential:
        return x < 0.0 ? 0.0 : params_[0] * std::exp(-params_[0] * x);
    }
    return 0.0;
  }

  /// Parent probability of [x1, x2], computed in whichever tail is accurate.
  double parent_mass(double x1, double x2) const {
    switch (family_) {
      case Family::Uniform: return (x2 - x1) / (params_[1] - params_[0]);
      case Family::Triangular: return tri_cdf(x2) - tri_cdf(x1);
      case Family::TruncatedGaussian: {
        const double s = std::sqrt(2.0 * params_[1]);
        const double z1 = (x1 - params_[0]) / s, z2 = (x2 - params_[0]) / s;
        if (z1 >= 0.0) return 0.5 * (std::erfc(z1) - std::erfc(z2));
        if (z2 <= 0.0) return 0.5 * (std::erfc(-z2) - std::erfc(-z1));
        return 0.5 * (std::erf(z2) - std::erf(z1));
      }
      case Family::TruncatedGumbel: {
        const double z1 = (x1 - params_[0]) / params_[1], z2 = (x2 - params_[0]) / params_[1];
        if (z1 >= 0.0) {
          const double s1 = -std::expm1(-std::exp(-z1)), s2 = -std::expm1(-std::exp(-z2));
          return s1 - s2;
        }
        return std::exp(-std::exp(-z2)) - std::exp(-std::exp(-z1));
      }
      case Family::TruncatedExponential: {
        const double r = params_[0];
        return std::exp(-r * x1) * (-std::expm1(-r * (x2 - x1)));
      }
    }
    return 0.0;
  }

  double tri_cdf(double x) const {
    const double lo = params_[0], c = params_[1], hi = params_[2];
    if (x <= lo) return 0.0;
    if (x >= hi) return 1.0;
    if (x <= c) return (x - lo) * (x - lo) / ((hi - lo) * (c - lo));
    return 1.0 - (hi - x) * (hi - x) / ((hi - lo) * (hi - c));
  }

  double initial_quantile(double u) const {
    switch (family_) {
      case Family::Uniform: return a_ + u * (b_ - a_);
      case Family::Triangular: {
        const double lo = params_[0], c = params_[1], hi = params_[2];
        if (u <= (c - lo) / (hi - lo)) return lo + std::sqrt(u * (hi - lo) * (c - lo));
        return hi - std::sqrt((1.0 - u) * (hi - lo) * (hi - c));
      }
      case Family::TruncatedExponential: {
        const double r = params_[0];
        return a_ - std::log1p(-u * (-std::expm1(-r * (b_ - a_)))) / r;
      }
      case Family::TruncatedGumbel: {
        const double target = std::exp(-std::exp(-(a_ - params_[0]) / params_[1])) + u * mass_;
        return params_[0] - params_[1] * std::log(-std::log(std::min(target, 1.0 - 1e-16)));
      }
      case Family::TruncatedGaussian: {
        // Bisection warm start; Newton polishes.
        double lo = a_, hi = b_;
        for (int i = 0; i < 30; ++i) {
          const double mid = 0.5 * (lo + hi);
          (cdf(mid) < u ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
      }
    }
    return 0.5 * (a_ + b_);
  }

  Family family_ = Family::Uniform;
  std::vector<double> params_;
  double a_ = 0.0, b_ = 1.0, mass_ = 1.0, mean_ = 0.5;
};

/// Builds a normalized measure. `truncation` is required for Gaussian and
/// Gumbel (unbounded parents) and for the exponential upper end; for uniform
/// and triangular it may narrow the support.
inline Measure1D make_measure(Family family, std::vector<double> params,
                              std::optional<std::pair<double, double>> truncation = std::nullopt) {
  auto need = [&](std::size_t n) {
    if (params.size() != n)
      throw Error(ErrorKind::InvalidParams, std::string(to_string(family)) + " expects " +
                                                std::to_string(n) + " parameters");
    for (double p : params)
      if (!std::isfinite(p)) throw Error(ErrorKind::InvalidParams, "non-finite parameter");
  };
  Measure1D m;
  m.family_ = family;
  double lo = -std::numeric_limits<double>::infinity(), hi = std::numeric_limits<double>::infinity();
  switch (family) {
    case Family::Uniform:
      need(2);
      if (!(params[0] < params[1])) throw Error(ErrorKind::InvalidParams, "uniform needs lo < hi");
      lo = params[0];
      hi = params[1];
      break;
    case Family::Triangular:
      need(3);
      if (!(params[0] < params[1] && params[1] < params[2]))
        throw Error(ErrorKind::InvalidParams, "triangular needs lo < mode < hi");
      lo = params[0];
      hi = params[2];
      break;
    case Family::TruncatedGaussian:
      need(2);
      if (!(params[1] > 0.0)) throw Error(ErrorKind::InvalidParams, "gaussian variance must be > 0");
      break;
    case Family::TruncatedGumbel:
      need(2);
      if (!(params[1] > 0.0)) throw Error(ErrorKind::InvalidParams, "gumbel scale must be > 0");
      break;
    case Family::TruncatedExponential:
      need(1);
      if (!(params[0] > 0.0)) throw Error(ErrorKind::InvalidParams, "exponential rate must be > 0");
      lo = 0.0;
      break;
  }
  m.params_ = std::move(params);
  if (truncation) {
    if (!(truncation->first < truncation->second))
      throw Error(ErrorKind::InvalidParams, "truncation interval must satisfy lo < hi");
    lo = std::max(lo, truncation->first);
    hi = std::min(hi, truncation->second);
  }
  if (!std::isfinite(lo) || !std::isfinite(hi))
    throw Error(ErrorKind::InvalidParams,
                std::string(to_string(family)) + " needs a finite truncation interval");
  if (!(lo < hi)) throw Error(ErrorKind::ZeroMass, "truncation interval misses the support");
  m.a_ = lo;
  m.b_ = hi;
  m.mass_ = 1.0;
  const double mass = m.parent_mass(lo, hi);
  if (!(mass >= 1e-300)) throw Error(ErrorKind::ZeroMass, "parent mass on truncation interval < 1e-300");
  m.mass_ = mass;
  const auto breaks = m.breakpoints();
  m.mean_ = quad::adaptive_with_breaks([&](double x) { return x * m.pdf(x); }, lo, hi, breaks);
  return m;
}

/// Independent product of 1-D measures.
class ProductMeasure {
 public:
  ProductMeasure() = default;
  explicit ProductMeasure(std::vector<Measure1D> components) : components_(std::move(components)) {
    if (components_.empty()) throw Error(ErrorKind::InvalidParams, "product measure needs d >= 1");
  }

  std::size_t dim() const { return components_.size(); }
  const Measure1D& operator[](std::size_t k) const { return components_[k]; }
  const std::vector<Measure1D>& components() const { return components_; }

 private:
  std::vector<Measure1D> components_;
};

/// n i.i.d. rows by inverse-CDF transform. Coordinate k draws from its own
/// uniform stream seeded by split_seed(seed, k), so results are bit-identical
/// for a fixed seed regardless of d.
inline Eigen::MatrixXd sample(const ProductMeasure& mu, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw Error(ErrorKind::InvalidParams, "sample size must be >= 1");
  Eigen::MatrixXd X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(mu.dim()));
  for (std::size_t k = 0; k < mu.dim(); ++k) {
    UniformStream u(split_seed(seed, k));
    for (std::size_t i = 0; i < n; ++i)
      X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = mu[k].quantile(u());
  }
  return X;
}

}  // namespace pgsa
