#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "pgsa/error.hpp"

namespace pgsa {

enum class Method { Standard, DerivAggregated, Combined };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::Standard: return "Standard";
    case Method::DerivAggregated: return "DerivAggregated";
    case Method::Combined: return "Combined";
  }
  return "?";
}

struct FitResult {
  Eigen::VectorXd coefficients;
  std::vector<std::size_t> active_set;  // column indices with nonzero coefficient
  double loo_error = 0.0;
  Method method = Method::Standard;
  // Diagnostics.
  std::vector<double> loo_path;                 // LOO error per candidate, [0] = empty model
  std::vector<std::size_t> rank_deficient;      // columns skipped as linearly dependent
};

struct LarsOptions {
  std::size_t max_terms = 200;
  /// Scale columns to unit Euclidean norm before computing the path.
  bool standardize = true;
};

/// Hybrid LARS-OLS. Least-angle regression produces nested active sets; each
/// set is refit by ordinary least squares and scored by the exact leave-one-out
/// error  (1/m) sum_i ((b_i - bhat_i) / (1 - h_ii))^2  from the hat-matrix
/// diagonal. The lowest-LOO candidate wins; candidates within the rounding
/// floor of the minimum resolve to the smaller set. The empty model is
/// candidate 0 with LOO mean(b^2). Path length is capped at
/// min(m - 1, P, max_terms). Entry ties go to the lowest column index.
inline FitResult lars_loo(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, LarsOptions opt = {}) {
  using Eigen::Index;
  const Index m = A.rows(), P = A.cols();
  if (m < 2) throw Error(ErrorKind::Degenerate, "lars_loo needs at least 2 rows");
  if (b.size() != m) throw Error(ErrorKind::InvalidParams, "lars_loo: row count mismatch");

  FitResult res;
  res.coefficients = Eigen::VectorXd::Zero(P);
  Eigen::VectorXd scale = Eigen::VectorXd::Ones(P);
  std::vector<bool> usable(static_cast<std::size_t>(P), true);
  for (Index j = 0; j < P; ++j) {
    const double nrm = A.col(j).norm();
    if (!(nrm > 0.0)) {
      usable[j] = false;
      res.rank_deficient.push_back(static_cast<std::size_t>(j));
    } else if (opt.standardize) {
      scale(j) = nrm;
    }
  }
  const Eigen::MatrixXd X = A * scale.cwiseInverse().asDiagonal();
  const std::size_t cap = std::min<std::size_t>({static_cast<std::size_t>(m - 1), static_cast<std::size_t>(P),
                                                 opt.max_terms});

  const double floor_b = b.squaredNorm() / static_cast<double>(m);
  res.loo_path.push_back(floor_b);

  std::vector<Index> active;
  std::vector<bool> in_active(static_cast<std::size_t>(P), false);
  Eigen::MatrixXd Q(m, 0);
  Eigen::MatrixXd R(0, 0);
  Eigen::VectorXd qty(0);
  Eigen::VectorXd ols_resid = b;
  Eigen::VectorXd hat_diag = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(m);

  std::size_t best_size = 0;
  double best_loo = floor_b;
  std::vector<double> loo_by_size{floor_b};

  while (active.size() < cap) {
    const Eigen::VectorXd c = X.transpose() * (b - mu);
    // Entering variable: largest |correlation| among inactive usable columns.
    Index enter = -1;
    double cmax = 0.0;
    for (Index j = 0; j < P; ++j) {
      if (in_active[j] || !usable[j]) continue;
      if (std::abs(c(j)) > cmax) {
        cmax = std::abs(c(j));
        enter = j;
      }
    }
    if (enter < 0 || cmax <= 1e-14 * std::sqrt(b.squaredNorm())) break;

    // Append to the QR factorization (Gram-Schmidt with one reorthogonalization).
    Eigen::VectorXd v = X.col(enter);
    Eigen::VectorXd r = Eigen::VectorXd::Zero(Q.cols() + 1);
    for (int pass = 0; pass < 2; ++pass) {
      if (Q.cols() == 0) break;
      const Eigen::VectorXd proj = Q.transpose() * v;
      v -= Q * proj;
      r.head(Q.cols()) += proj;
    }
    const double vn = v.norm();
    if (vn <= 1e-10 * X.col(enter).norm()) {
      usable[enter] = false;
      res.rank_deficient.push_back(static_cast<std::size_t>(enter));
      continue;
    }
    r(Q.cols()) = vn;
    v /= vn;
    const Index k = Q.cols();
    Q.conservativeResize(Eigen::NoChange, k + 1);
    Q.col(k) = v;
    Eigen::MatrixXd Rn = Eigen::MatrixXd::Zero(k + 1, k + 1);
    Rn.topLeftCorner(k, k) = R;
    Rn.col(k) = r;
    R = std::move(Rn);
    active.push_back(enter);
    in_active[enter] = true;

    // OLS on the active set and its exact LOO error.
    const double qb = v.dot(b);
    qty.conservativeResize(k + 1);
    qty(k) = qb;
    ols_resid -= qb * v;
    hat_diag += v.cwiseAbs2();
    double loo = 0.0;
    bool valid = true;
    for (Index i = 0; i < m; ++i) {
      const double denom = 1.0 - hat_diag(i);
      if (denom <= 1e-10) {
        valid = false;
        break;
      }
      const double e = ols_resid(i) / denom;
      loo += e * e;
    }
    loo = valid ? loo / static_cast<double>(m) : std::numeric_limits<double>::infinity();
    res.loo_path.push_back(loo);
    loo_by_size.push_back(loo);
    if (loo < best_loo) best_loo = loo;

    // Equiangular step. Signs of the active correlations; G = R^T R.
    const Index na = static_cast<Index>(active.size());
    Eigen::VectorXd s(na);
    for (Index a = 0; a < na; ++a) s(a) = c(active[a]) >= 0.0 ? 1.0 : -1.0;
    const Eigen::VectorXd tmp = R.transpose().triangularView<Eigen::Lower>().solve(s);
    const Eigen::VectorXd ginv_s = R.triangularView<Eigen::Upper>().solve(tmp);
    const double AA = 1.0 / std::sqrt(s.dot(ginv_s));
    const Eigen::VectorXd wA = AA * ginv_s;
    Eigen::VectorXd u = Eigen::VectorXd::Zero(m);
    for (Index a = 0; a < na; ++a) u += wA(a) * X.col(active[a]);
    const Eigen::VectorXd av = X.transpose() * u;
    double C = 0.0;
    for (Index a : active) C = std::max(C, std::abs(c(a)));
    double gamma = C / AA;  // full step to the OLS solution
    if (active.size() < cap) {
      for (Index j = 0; j < P; ++j) {
        if (in_active[j] || !usable[j]) continue;
        const double g1 = (C - c(j)) / (AA - av(j));
        const double g2 = (C + c(j)) / (AA + av(j));
        if (g1 > 1e-15 && g1 < gamma) gamma = g1;
        if (g2 > 1e-15 && g2 < gamma) gamma = g2;
      }
    }
    mu += gamma * u;
  }

  // Smallest candidate within the rounding floor of the best LOO.
  const double tie_floor = best_loo + 1e-14 * floor_b;
  for (std::size_t s = 0; s < loo_by_size.size(); ++s) {
    if (loo_by_size[s] <= tie_floor) {
      best_size = s;
      break;
    }
  }
  res.loo_error = loo_by_size[best_size];
  if (best_size > 0) {
    const Index k = static_cast<Index>(best_size);
    const Eigen::VectorXd coef =
        R.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(qty.head(k));
    for (Index a = 0; a < k; ++a) {
      const Index j = active[static_cast<std::size_t>(a)];
      res.coefficients(j) = coef(a) / scale(j);
      res.active_set.push_back(static_cast<std::size_t>(j));
    }
  }
  return res;
}

}  // namespace pgsa
