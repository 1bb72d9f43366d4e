#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pgsa/error.hpp"
#include "pgsa/spectral.hpp"

namespace pgsa {

/// Per-variable mode degrees alpha_1..alpha_d.
struct MultiIndex {
  std::vector<int> entries;

  std::size_t dim() const { return entries.size(); }
  int operator[](std::size_t k) const { return entries[k]; }
  int total_degree() const { return std::accumulate(entries.begin(), entries.end(), 0); }
  int rank() const {
    return static_cast<int>(std::count_if(entries.begin(), entries.end(), [](int a) { return a > 0; }));
  }
  bool is_zero() const { return total_degree() == 0; }
  friend bool operator==(const MultiIndex&, const MultiIndex&) = default;
};

/// Total-degree set {alpha : sum alpha_k <= p} in graded lexicographic order:
/// ascending total degree, then descending lexicographic within a degree, so
/// for d=2: (0,0) (1,0) (0,1) (2,0) (1,1) (0,2) ...
struct TruncationSet {
  std::size_t d = 0;
  int p = 0;
  std::vector<MultiIndex> indices;

  std::size_t size() const { return indices.size(); }
  const MultiIndex& operator[](std::size_t j) const { return indices[j]; }
};

inline TruncationSet total_degree_set(std::size_t d, int p) {
  if (d < 1) throw Error(ErrorKind::InvalidParams, "truncation needs d >= 1");
  if (p < 0) throw Error(ErrorKind::InvalidParams, "truncation needs p >= 0");
  TruncationSet set{d, p, {}};
  std::vector<int> cur(d, 0);
  // Fill positions k..d-1 with exactly `left` units, first entry largest first.
  std::function<void(std::size_t, int)> fill = [&](std::size_t k, int left) {
    if (k + 1 == d) {
      cur[k] = left;
      set.indices.push_back(MultiIndex{cur});
      return;
    }
    for (int v = left; v >= 0; --v) {
      cur[k] = v;
      fill(k + 1, left - v);
    }
  };
  for (int deg = 0; deg <= p; ++deg) fill(0, deg);
  return set;
}

using BasisPtr = std::shared_ptr<const PoincareBasis1D>;

/// Truncation set bound to d univariate Poincare bases; the "definition" half
/// of a chaos expansion (everything except the coefficients).
class ChaosBasis {
 public:
  ChaosBasis() = default;
  ChaosBasis(TruncationSet set, std::vector<BasisPtr> bases) : set_(std::move(set)), bases_(std::move(bases)) {
    if (bases_.size() != set_.d) throw Error(ErrorKind::InvalidParams, "need one univariate basis per dimension");
    max_mode_.assign(set_.d, 0);
    for (const auto& a : set_.indices)
      for (std::size_t k = 0; k < set_.d; ++k) max_mode_[k] = std::max(max_mode_[k], a[k]);
    for (std::size_t k = 0; k < set_.d; ++k)
      if (static_cast<std::size_t>(max_mode_[k]) > bases_[k]->modes())
        throw Error(ErrorKind::InvalidParams, "basis " + std::to_string(k) + " has too few modes");
  }

  const TruncationSet& truncation() const { return set_; }
  std::size_t dim() const { return set_.d; }
  std::size_t size() const { return set_.size(); }
  const PoincareBasis1D& basis(std::size_t k) const { return *bases_[k]; }
  const std::vector<BasisPtr>& bases() const { return bases_; }

  /// lambda_{k, j}
  double eigenvalue(std::size_t k, int j) const { return bases_[k]->eigenvalue(static_cast<std::size_t>(j)); }

  /// Per-point univariate tables: values[k][j] = psi_{k,j}(x_k), derivs likewise.
  struct PointTables {
    std::vector<std::vector<double>> values, derivs;
  };

  void tabulate(const Eigen::Ref<const Eigen::RowVectorXd>& x, PointTables& t) const {
    t.values.resize(dim());
    t.derivs.resize(dim());
    for (std::size_t k = 0; k < dim(); ++k) {
      const auto up = static_cast<std::size_t>(max_mode_[k]);
      t.values[k].resize(up + 1);
      t.derivs[k].resize(up + 1);
      bases_[k]->eval_all(x(static_cast<Eigen::Index>(k)), up, t.values[k], t.derivs[k]);
    }
  }

 private:
  TruncationSet set_;
  std::vector<BasisPtr> bases_;
  std::vector<int> max_mode_;
};

namespace detail {
inline void check_points(const ChaosBasis& cb, const Eigen::MatrixXd& X) {
  if (static_cast<std::size_t>(X.cols()) != cb.dim())
    throw Error(ErrorKind::InvalidParams, "point matrix has wrong number of columns");
}
}  // namespace detail

/// Psi(i, j) = prod_k psi_{k, alpha_jk}(x_ik).
inline Eigen::MatrixXd basis_matrix(const ChaosBasis& cb, const Eigen::MatrixXd& X) {
  detail::check_points(cb, X);
  const auto& set = cb.truncation();
  Eigen::MatrixXd Psi(X.rows(), static_cast<Eigen::Index>(set.size()));
  ChaosBasis::PointTables t;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    cb.tabulate(X.row(i), t);
    for (std::size_t j = 0; j < set.size(); ++j) {
      double v = 1.0;
      for (std::size_t k = 0; k < cb.dim(); ++k) v *= t.values[k][set[j][k]];
      Psi(i, static_cast<Eigen::Index>(j)) = v;
    }
  }
  return Psi;
}

/// Psi_d,k(i, j) = psi'_{k,alpha_jk}(x_ik) prod_{l != k} psi_{l,alpha_jl}(x_il).
/// Columns with alpha_jk = 0 are exactly zero.
inline Eigen::MatrixXd deriv_matrix(const ChaosBasis& cb, const Eigen::MatrixXd& X, std::size_t k) {
  detail::check_points(cb, X);
  if (k >= cb.dim()) throw Error(ErrorKind::InvalidParams, "variable index out of range");
  const auto& set = cb.truncation();
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(X.rows(), static_cast<Eigen::Index>(set.size()));
  ChaosBasis::PointTables t;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    cb.tabulate(X.row(i), t);
    for (std::size_t j = 0; j < set.size(); ++j) {
      if (set[j][k] == 0) continue;
      double v = t.derivs[k][set[j][k]];
      for (std::size_t l = 0; l < cb.dim(); ++l)
        if (l != k) v *= t.values[l][set[j][l]];
      D(i, static_cast<Eigen::Index>(j)) = v;
    }
  }
  return D;
}

/// sqrt(1 + sum_k lambda_{k, alpha_k}): the H1(mu, w) norm of psi_alpha.
inline Eigen::VectorXd h1_column_norms(const ChaosBasis& cb) {
  const auto& set = cb.truncation();
  Eigen::VectorXd norms(static_cast<Eigen::Index>(set.size()));
  for (std::size_t j = 0; j < set.size(); ++j) {
    double s = 1.0;
    for (std::size_t k = 0; k < cb.dim(); ++k) s += cb.eigenvalue(k, set[j][k]);
    norms(static_cast<Eigen::Index>(j)) = std::sqrt(s);
  }
  return norms;
}

/// A chaos basis plus one coefficient per multi-index.
struct ChaosExpansion {
  ChaosBasis basis;
  Eigen::VectorXd coefficients;

  ChaosExpansion() = default;
  ChaosExpansion(ChaosBasis b, Eigen::VectorXd c) : basis(std::move(b)), coefficients(std::move(c)) {
    if (static_cast<std::size_t>(coefficients.size()) != basis.size())
      throw Error(ErrorKind::InvalidParams, "coefficient vector length must equal P");
  }

  std::size_t dim() const { return basis.dim(); }
};

namespace detail {
inline std::vector<std::size_t> nonzero_terms(const ChaosExpansion& e) {
  std::vector<std::size_t> nz;
  for (Eigen::Index j = 0; j < e.coefficients.size(); ++j)
    if (e.coefficients(j) != 0.0) nz.push_back(static_cast<std::size_t>(j));
  return nz;
}
}  // namespace detail

/// Surrogate values. Only nonzero terms are evaluated, row by row, so large
/// Monte Carlo samples never materialize the n x P matrix.
inline Eigen::VectorXd predict(const ChaosExpansion& e, const Eigen::MatrixXd& X) {
  detail::check_points(e.basis, X);
  const auto nz = detail::nonzero_terms(e);
  const auto& set = e.basis.truncation();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(X.rows());
  if (nz.empty()) return out;
  ChaosBasis::PointTables t;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    e.basis.tabulate(X.row(i), t);
    double s = 0.0;
    for (std::size_t j : nz) {
      double v = e.coefficients(static_cast<Eigen::Index>(j));
      for (std::size_t k = 0; k < e.dim(); ++k) v *= t.values[k][set[j][k]];
      s += v;
    }
    out(i) = s;
  }
  return out;
}

/// Surrogate gradients, n x d.
inline Eigen::MatrixXd predict_grad(const ChaosExpansion& e, const Eigen::MatrixXd& X) {
  detail::check_points(e.basis, X);
  const auto nz = detail::nonzero_terms(e);
  const auto& set = e.basis.truncation();
  const std::size_t d = e.dim();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(X.rows(), static_cast<Eigen::Index>(d));
  if (nz.empty()) return out;
  ChaosBasis::PointTables t;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    e.basis.tabulate(X.row(i), t);
    for (std::size_t j : nz) {
      const double c = e.coefficients(static_cast<Eigen::Index>(j));
      for (std::size_t k = 0; k < d; ++k) {
        if (set[j][k] == 0) continue;
        double v = c * t.derivs[k][set[j][k]];
        for (std::size_t l = 0; l < d; ++l)
          if (l != k) v *= t.values[l][set[j][l]];
        out(i, static_cast<Eigen::Index>(k)) += v;
      }
    }
  }
  return out;
}

/// {"terms": [{"alpha": [...], "c": value}, ...], "eigenvalues": [[...], ...]}.
/// Zero coefficients are omitted.
inline nlohmann::json expansion_to_json(const ChaosExpansion& e) {
  nlohmann::json terms = nlohmann::json::array();
  const auto& set = e.basis.truncation();
  for (std::size_t j = 0; j < set.size(); ++j) {
    const double c = e.coefficients(static_cast<Eigen::Index>(j));
    if (c != 0.0) terms.push_back({{"alpha", set[j].entries}, {"c", c}});
  }
  nlohmann::json eig = nlohmann::json::array();
  for (std::size_t k = 0; k < e.dim(); ++k) eig.push_back(e.basis.basis(k).eigenvalues());
  return {{"d", set.d}, {"p", set.p}, {"terms", terms}, {"eigenvalues", eig}};
}

/// Reads coefficients written by expansion_to_json onto an existing basis.
inline ChaosExpansion expansion_from_json(const nlohmann::json& j, const ChaosBasis& cb) {
  const auto& set = cb.truncation();
  Eigen::VectorXd c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(set.size()));
  for (const auto& term : j.at("terms")) {
    const MultiIndex alpha{term.at("alpha").get<std::vector<int>>()};
    const auto it = std::find(set.indices.begin(), set.indices.end(), alpha);
    if (it == set.indices.end()) throw Error(ErrorKind::InvalidParams, "multi-index not in truncation set");
    c(it - set.indices.begin()) = term.at("c").get<double>();
  }
  return ChaosExpansion(cb, std::move(c));
}

}  // namespace pgsa
