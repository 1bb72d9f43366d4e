#pragma once

#include <Eigen/Dense>

#include <ostream>
#include <vector>

#include <nlohmann/json.hpp>

#include "pgsa/chaos.hpp"
#include "pgsa/error.hpp"

namespace pgsa {

/// Variance-based and derivative-based indices read off a Poincare chaos
/// expansion. All quantities refer to the surrogate.
struct GsaReport {
  double variance = 0.0;
  std::vector<double> total_sobol;
  std::vector<double> first_sobol;
  std::vector<double> dgsm;
  std::vector<double> poincare_constants;
  std::vector<double> bound_ratios;  // C_P * nu / variance
};

/// sum_{alpha != 0} c_alpha^2
inline double chaos_variance(const ChaosExpansion& e) {
  return e.coefficients.tail(e.coefficients.size() - 1).squaredNorm();
}

inline std::vector<double> total_sobol(const ChaosExpansion& e) {
  const double var = chaos_variance(e);
  if (!(var > 0.0)) throw Error(ErrorKind::ZeroVariance, "expansion has zero variance");
  const auto& set = e.basis.truncation();
  std::vector<double> s(e.dim(), 0.0);
  for (std::size_t j = 1; j < set.size(); ++j) {
    const double c2 = e.coefficients(static_cast<Eigen::Index>(j)) * e.coefficients(static_cast<Eigen::Index>(j));
    for (std::size_t k = 0; k < e.dim(); ++k)
      if (set[j][k] > 0) s[k] += c2;
  }
  for (double& v : s) v /= var;
  return s;
}

/// First-order: terms that depend on x_k only.
inline std::vector<double> first_sobol(const ChaosExpansion& e) {
  const double var = chaos_variance(e);
  if (!(var > 0.0)) throw Error(ErrorKind::ZeroVariance, "expansion has zero variance");
  const auto& set = e.basis.truncation();
  std::vector<double> s(e.dim(), 0.0);
  for (std::size_t j = 1; j < set.size(); ++j) {
    if (set[j].rank() != 1) continue;
    const double c = e.coefficients(static_cast<Eigen::Index>(j));
    for (std::size_t k = 0; k < e.dim(); ++k)
      if (set[j][k] > 0) s[k] += c * c;
  }
  for (double& v : s) v /= var;
  return s;
}

/// nu_k = sum_{alpha_k >= 1} lambda_{k, alpha_k} c_alpha^2  (= E[w_k (dM/dx_k)^2]).
inline std::vector<double> dgsm(const ChaosExpansion& e) {
  const auto& set = e.basis.truncation();
  std::vector<double> nu(e.dim(), 0.0);
  for (std::size_t j = 1; j < set.size(); ++j) {
    const double c = e.coefficients(static_cast<Eigen::Index>(j));
    for (std::size_t k = 0; k < e.dim(); ++k)
      if (set[j][k] > 0) nu[k] += e.basis.eigenvalue(k, set[j][k]) * c * c;
  }
  return nu;
}

inline GsaReport analyze(const ChaosExpansion& e) {
  GsaReport r;
  r.variance = chaos_variance(e);
  r.total_sobol = total_sobol(e);
  r.first_sobol = first_sobol(e);
  r.dgsm = dgsm(e);
  for (std::size_t k = 0; k < e.dim(); ++k) {
    r.poincare_constants.push_back(poincare_constant(e.basis.basis(k)));
    r.bound_ratios.push_back(r.poincare_constants[k] * r.dgsm[k] / r.variance);
  }
  return r;
}

struct BoundCheck {
  std::vector<bool> holds;
  std::vector<double> margins;  // C_P nu_k / Var - S_k^tot
};

/// S_k^tot <= C_P(mu_k, w_k) nu_k / Var, per variable, to 1e-10.
inline BoundCheck sobol_dgsm_bound(const GsaReport& r) {
  BoundCheck b;
  for (std::size_t k = 0; k < r.total_sobol.size(); ++k) {
    const double margin = r.bound_ratios[k] - r.total_sobol[k];
    b.margins.push_back(margin);
    b.holds.push_back(margin >= -1e-10);
  }
  return b;
}

inline nlohmann::json report_to_json(const GsaReport& r, const std::vector<std::string>& names = {}) {
  const auto bound = sobol_dgsm_bound(r);
  nlohmann::json vars = nlohmann::json::array();
  for (std::size_t k = 0; k < r.total_sobol.size(); ++k) {
    vars.push_back({{"variable", k < names.size() ? names[k] : "x" + std::to_string(k + 1)},
                    {"S_tot", r.total_sobol[k]},
                    {"S_first", r.first_sobol[k]},
                    {"nu", r.dgsm[k]},
                    {"C_P", r.poincare_constants[k]},
                    {"bound_margin", bound.margins[k]}});
  }
  return {{"variance", r.variance}, {"variables", vars}};
}

inline void report_to_csv(const GsaReport& r, std::ostream& os, const std::vector<std::string>& names = {}) {
  const auto bound = sobol_dgsm_bound(r);
  os.precision(17);
  os << "variable,S_tot,S_first,nu,C_P,bound_margin\n";
  for (std::size_t k = 0; k < r.total_sobol.size(); ++k)
    os << (k < names.size() ? names[k] : "x" + std::to_string(k + 1)) << ',' << r.total_sobol[k] << ','
       << r.first_sobol[k] << ',' << r.dgsm[k] << ',' << r.poincare_constants[k] << ',' << bound.margins[k] << '\n';
}

}  // namespace pgsa
