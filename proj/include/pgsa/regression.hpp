#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pgsa/chaos.hpp"
#include "pgsa/error.hpp"
#include "pgsa/lars.hpp"
#include "pgsa/rng.hpp"

namespace pgsa {

/// Experimental design: inputs X (n x d), values y, optional gradients G (n x d).
struct DesignData {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  std::optional<Eigen::MatrixXd> G;

  Eigen::Index size() const { return X.rows(); }

  void validate(const ChaosBasis& cb) const {
    if (static_cast<std::size_t>(X.cols()) != cb.dim())
      throw Error(ErrorKind::InvalidParams, "design has wrong dimension");
    if (y.size() != X.rows()) throw Error(ErrorKind::InvalidParams, "y length differs from design size");
    if (G && (G->rows() != X.rows() || G->cols() != X.cols()))
      throw Error(ErrorKind::InvalidParams, "gradient matrix shape differs from design");
    for (Eigen::Index i = 0; i < X.rows(); ++i)
      for (std::size_t k = 0; k < cb.dim(); ++k) {
        const double x = X(i, static_cast<Eigen::Index>(k));
        const auto& b = cb.basis(k);
        const double tol = 1e-12 * (b.b() - b.a());
        if (!(x >= b.a() - tol && x <= b.b() + tol))
          throw Error(ErrorKind::OutOfSupport, "design point outside support in variable " + std::to_string(k));
      }
  }
};

/// Function values only: LARS-LOO on (Psi, y).
inline FitResult fit_standard(const ChaosBasis& cb, const DesignData& data, LarsOptions opt = {}) {
  data.validate(cb);
  FitResult r = lars_loo(basis_matrix(cb, data.X), data.y, opt);
  r.method = Method::Standard;
  return r;
}

namespace detail {
inline std::vector<double> sqrt_weights(const ChaosBasis& cb, const Eigen::MatrixXd& X, std::size_t k) {
  std::vector<double> t(static_cast<std::size_t>(X.rows()));
  const auto& w = cb.basis(k).weight();
  for (Eigen::Index i = 0; i < X.rows(); ++i) t[i] = std::sqrt(std::max(0.0, w(X(i, static_cast<Eigen::Index>(k)))));
  return t;
}
}  // namespace detail

/// One weighted sparse regression per partial derivative, over the columns
/// that depend on x_k; a coefficient estimated by several derivative fits is
/// the plain average of those estimates (zeros from fits that did not select
/// it included). The constant term is the mean of the residual y - Psi c.
/// loo_error reports the mean of the per-derivative LOO errors.
inline FitResult fit_deriv_aggregated(const ChaosBasis& cb, const DesignData& data, LarsOptions opt = {}) {
  data.validate(cb);
  if (!data.G) throw Error(ErrorKind::MissingGradients, "aggregated fit needs gradient data");
  const auto& set = cb.truncation();
  const auto P = static_cast<Eigen::Index>(set.size());
  const Eigen::Index n = data.size();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(P);
  FitResult out;
  out.method = Method::DerivAggregated;
  double loo_acc = 0.0;
  for (std::size_t k = 0; k < cb.dim(); ++k) {
    std::vector<Eigen::Index> cols;
    for (std::size_t j = 0; j < set.size(); ++j)
      if (set[j][k] > 0) cols.push_back(static_cast<Eigen::Index>(j));
    if (cols.empty()) continue;
    const Eigen::MatrixXd D = deriv_matrix(cb, data.X, k);
    const auto t = detail::sqrt_weights(cb, data.X, k);
    Eigen::MatrixXd A(n, static_cast<Eigen::Index>(cols.size()));
    Eigen::VectorXd rhs(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < cols.size(); ++c) A(i, static_cast<Eigen::Index>(c)) = t[i] * D(i, cols[c]);
      rhs(i) = t[i] * (*data.G)(i, static_cast<Eigen::Index>(k));
    }
    const FitResult rk = lars_loo(A, rhs, opt);
    for (std::size_t c = 0; c < cols.size(); ++c) sum(cols[c]) += rk.coefficients(static_cast<Eigen::Index>(c));
    for (std::size_t c : rk.rank_deficient) out.rank_deficient.push_back(static_cast<std::size_t>(cols[c]));
    loo_acc += rk.loo_error;
  }
  out.coefficients = Eigen::VectorXd::Zero(P);
  for (Eigen::Index j = 0; j < P; ++j) {
    const int rank = set[static_cast<std::size_t>(j)].rank();
    if (rank > 0) out.coefficients(j) = sum(j) / rank;
  }
  const Eigen::VectorXd resid = data.y - basis_matrix(cb, data.X) * out.coefficients;
  out.coefficients(0) = resid.mean();  // index 0 is the zero multi-index
  out.loo_error = loo_acc / static_cast<double>(cb.dim());
  for (Eigen::Index j = 0; j < P; ++j)
    if (out.coefficients(j) != 0.0) out.active_set.push_back(static_cast<std::size_t>(j));
  return out;
}

/// Stacked system [Psi; T_1 Psi_d1; ...; T_d Psi_dd] c = [y; T_1 g_1; ...]
/// with (T_k)_ii = sqrt(w_k(x_ik)); column alpha is divided by its H1 norm
/// sqrt(1 + sum_k lambda_{k,alpha_k}) before LARS and the coefficients are
/// mapped back afterwards.
inline Eigen::MatrixXd combined_matrix(const ChaosBasis& cb, const Eigen::MatrixXd& X, Eigen::VectorXd* norms = nullptr) {
  const Eigen::Index n = X.rows();
  const auto P = static_cast<Eigen::Index>(cb.size());
  const auto d = static_cast<Eigen::Index>(cb.dim());
  Eigen::MatrixXd A(n * (d + 1), P);
  A.topRows(n) = basis_matrix(cb, X);
  for (Eigen::Index k = 0; k < d; ++k) {
    const auto t = detail::sqrt_weights(cb, X, static_cast<std::size_t>(k));
    Eigen::MatrixXd D = deriv_matrix(cb, X, static_cast<std::size_t>(k));
    for (Eigen::Index i = 0; i < n; ++i) D.row(i) *= t[static_cast<std::size_t>(i)];
    A.middleRows(n * (k + 1), n) = D;
  }
  const Eigen::VectorXd h1 = h1_column_norms(cb);
  A = A * h1.cwiseInverse().asDiagonal();
  if (norms) *norms = h1;
  return A;
}

inline Eigen::VectorXd combined_rhs(const ChaosBasis& cb, const DesignData& data) {
  const Eigen::Index n = data.size();
  const auto d = static_cast<Eigen::Index>(cb.dim());
  Eigen::VectorXd rhs(n * (d + 1));
  rhs.head(n) = data.y;
  for (Eigen::Index k = 0; k < d; ++k) {
    const auto t = detail::sqrt_weights(cb, data.X, static_cast<std::size_t>(k));
    for (Eigen::Index i = 0; i < n; ++i) rhs(n * (k + 1) + i) = t[static_cast<std::size_t>(i)] * (*data.G)(i, k);
  }
  return rhs;
}

inline FitResult fit_combined(const ChaosBasis& cb, const DesignData& data, LarsOptions opt = {}) {
  data.validate(cb);
  if (!data.G) throw Error(ErrorKind::MissingGradients, "combined fit needs gradient data");
  Eigen::VectorXd h1;
  const Eigen::MatrixXd A = combined_matrix(cb, data.X, &h1);
  FitResult r = lars_loo(A, combined_rhs(cb, data), opt);
  r.coefficients = r.coefficients.cwiseQuotient(h1);
  r.method = Method::Combined;
  return r;
}

inline FitResult fit(Method m, const ChaosBasis& cb, const DesignData& data, LarsOptions opt = {}) {
  switch (m) {
    case Method::Standard: return fit_standard(cb, data, opt);
    case Method::DerivAggregated: return fit_deriv_aggregated(cb, data, opt);
    case Method::Combined: return fit_combined(cb, data, opt);
  }
  throw Error(ErrorKind::InvalidParams, "unknown method");
}

/// Row resample with replacement; each resampled row keeps its y and full
/// gradient row together.
inline DesignData bootstrap_rows(const DesignData& data, std::uint64_t seed) {
  const Eigen::Index n = data.size();
  std::mt19937_64 eng(seed);
  DesignData out;
  out.X.resize(n, data.X.cols());
  out.y.resize(n);
  if (data.G) out.G = Eigen::MatrixXd(n, data.G->cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    // Multiply-shift index draw; independent of the standard library's
    // distribution implementations.
    const auto src = static_cast<Eigen::Index>((static_cast<unsigned __int128>(eng()) * static_cast<std::uint64_t>(n)) >> 64);
    out.X.row(i) = data.X.row(src);
    out.y(i) = data.y(src);
    if (data.G) out.G->row(i) = data.G->row(src);
  }
  return out;
}

inline nlohmann::json fit_to_json(const FitResult& r, const TruncationSet& set) {
  nlohmann::json terms = nlohmann::json::array();
  for (std::size_t j = 0; j < set.size(); ++j) {
    const double c = r.coefficients(static_cast<Eigen::Index>(j));
    if (c != 0.0) terms.push_back({{"alpha", set[j].entries}, {"c", c}});
  }
  return {{"method", to_string(r.method)}, {"loo_error", r.loo_error}, {"terms", terms}};
}

}  // namespace pgsa
