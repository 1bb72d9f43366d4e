#pragma once

#include <lapacke.h>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pgsa/error.hpp"
#include "pgsa/interp.hpp"
#include "pgsa/measures.hpp"
#include "pgsa/quadrature.hpp"
#include "pgsa/weights.hpp"

namespace pgsa {

/// Strictly increasing FEM nodes x_0 = a < ... < x_n = b.
struct Mesh1D {
  std::vector<double> nodes;

  std::size_t elements() const { return nodes.empty() ? 0 : nodes.size() - 1; }

  static Mesh1D uniform(double a, double b, std::size_t n) {
    if (n < 50) throw Error(ErrorKind::InvalidParams, "mesh needs at least 50 elements");
    Mesh1D m;
    m.nodes.resize(n + 1);
    for (std::size_t i = 0; i <= n; ++i)
      m.nodes[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n);
    m.nodes.back() = b;
    return m;
  }

  /// Uniform mesh whose end elements are split geometrically (ratio 0.7,
  /// 20 extra nodes) at every endpoint where w rho vanishes, with the nodes
  /// nearest to density breakpoints moved onto them.
  static Mesh1D for_measure(const Measure1D& mu, const Weight1D& w, std::size_t n) {
    Mesh1D m = uniform(mu.a(), mu.b(), n);
    constexpr int layers = 20;
    constexpr double ratio = 0.7;
    const double h = (mu.b() - mu.a()) / static_cast<double>(n);
    double peak = 0.0;
    for (std::size_t i = 1; i < n; i += std::max<std::size_t>(1, n / 64)) peak = std::max(peak, w.product(mu, m.nodes[i]));
    auto vanishes = [&](double x) { return w.product(mu, x) <= 1e-8 * peak; };
    for (double c : mu.breakpoints()) {
      const auto it = std::lower_bound(m.nodes.begin(), m.nodes.end(), c);
      if (it == m.nodes.begin() || it == m.nodes.end()) continue;
      auto near = (*it - c < c - *(it - 1)) ? it : it - 1;
      if (near != m.nodes.begin() && near + 1 != m.nodes.end()) *near = c;
    }
    std::vector<double> extra;
    if (vanishes(mu.a()))
      for (int k = 1; k <= layers; ++k) extra.push_back(mu.a() + h * std::pow(ratio, k));
    if (vanishes(mu.b()))
      for (int k = 1; k <= layers; ++k) extra.push_back(mu.b() - h * std::pow(ratio, k));
    if (!extra.empty()) {
      m.nodes.insert(m.nodes.end(), extra.begin(), extra.end());
      std::sort(m.nodes.begin(), m.nodes.end());
    }
    return m;
  }
};

/// Univariate weighted Poincare basis: eigenpairs 0 = lambda_0 < lambda_1 < ...
/// of <f', g'>_w = lambda <f, g> (natural Neumann conditions), with each
/// eigenfunction L2(mu)-normalized and wrapped in a cubic spline.
class PoincareBasis1D {
 public:
  const Measure1D& measure() const { return measure_; }
  const Weight1D& weight() const { return weight_; }
  const Mesh1D& mesh() const { return mesh_; }
  std::size_t modes() const { return eigenvalues_.size() - 1; }  // K
  double a() const { return measure_.a(); }
  double b() const { return measure_.b(); }

  const std::vector<double>& eigenvalues() const { return eigenvalues_; }
  double eigenvalue(std::size_t j) const { return eigenvalues_.at(j); }
  /// Raw P1 eigenvalues before the spline Ritz step (O(h^2) accurate).
  const std::vector<double>& fem_eigenvalues() const { return fem_eigenvalues_; }
  /// FEM nodal vector of mode j (M-orthonormal).
  const std::vector<double>& nodal(std::size_t j) const { return splines_.at(j).values(); }

  const std::optional<ExistenceReport>& existence() const { return existence_; }
  const std::string& warning() const { return warning_; }

  double eval(std::size_t j, double x) const {
    check(j, x);
    return splines_[j](clamp(x));
  }
  double eval_deriv(std::size_t j, double x) const {
    check(j, x);
    return splines_[j].derivative(clamp(x));
  }

  std::vector<double> eval(std::size_t j, std::span<const double> xs) const {
    std::vector<double> out(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) out[i] = eval(j, xs[i]);
    return out;
  }
  std::vector<double> eval_deriv(std::size_t j, std::span<const double> xs) const {
    std::vector<double> out(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) out[i] = eval_deriv(j, xs[i]);
    return out;
  }

  /// psi_0..psi_upto and derivatives at x, sharing one interval lookup.
  void eval_all(double x, std::size_t upto, std::span<double> values, std::span<double> derivs) const {
    check(upto, x);
    const double xc = clamp(x);
    const std::size_t i = detail::locate(mesh_.nodes, xc);
    for (std::size_t j = 0; j <= upto; ++j) {
      values[j] = splines_[j].value(i, xc);
      derivs[j] = splines_[j].deriv(i, xc);
    }
  }

  friend PoincareBasis1D build_basis(const Measure1D&, const Weight1D&, std::size_t, std::size_t);
  friend PoincareBasis1D build_basis_on_mesh(const Measure1D&, const Weight1D&, std::size_t, Mesh1D);

 private:
  void check(std::size_t j, double x) const {
    if (j >= splines_.size())
      throw Error(ErrorKind::InvalidParams, "mode index " + std::to_string(j) + " > K");
    const double tol = 1e-12 * (b() - a());
    if (!(x >= a() - tol && x <= b() + tol))
      throw Error(ErrorKind::OutOfSupport, "x=" + std::to_string(x) + " outside support");
  }
  double clamp(double x) const { return std::clamp(x, a(), b()); }

  Measure1D measure_;
  Weight1D weight_;
  Mesh1D mesh_;
  std::vector<double> eigenvalues_;
  std::vector<double> fem_eigenvalues_;
  std::vector<CubicSpline> splines_;
  std::optional<ExistenceReport> existence_;
  std::string warning_;
};

/// P1 FEM on the given mesh. Stiffness S = int w rho phi_i' phi_j', mass
/// M = int rho phi_i phi_j (both tridiagonal, 8-point Gauss per element), then
/// the K+1 smallest eigenvalues of S v = lambda M v from LAPACK dsbgvx (standard
/// form through the split Cholesky factor of M); eigenvectors by inverse
/// iteration on the tridiagonal pencil S - sigma M, followed by a Rayleigh-Ritz
/// step on the span of their cubic-spline interpolants. Sign: psi_j(b) > 0,
/// or psi_j'(b-) > 0 when psi_j(b) is numerically zero.
inline PoincareBasis1D build_basis_on_mesh(const Measure1D& mu, const Weight1D& w, std::size_t n_modes,
                                           Mesh1D mesh) {
  if (n_modes < 1) throw Error(ErrorKind::InvalidParams, "need at least one nontrivial mode");
  const std::size_t ne = mesh.elements();
  if (ne < std::max<std::size_t>(50, 20 * n_modes))
    throw Error(ErrorKind::InvalidParams, "mesh too coarse: need n >= max(50, 20 K)");
  const auto n = static_cast<lapack_int>(ne + 1);
  const auto& x = mesh.nodes;

  // Upper band storage, ldab = 2: row 0 holds the superdiagonal, row 1 the diagonal.
  std::vector<double> sb(2 * static_cast<std::size_t>(n), 0.0), mb(2 * static_cast<std::size_t>(n), 0.0);
  auto diag = [&](std::vector<double>& band, std::size_t i) -> double& { return band[2 * i + 1]; };
  auto super = [&](std::vector<double>& band, std::size_t i) -> double& { return band[2 * (i + 1)]; };
  for (std::size_t e = 0; e < ne; ++e) {
    const double lo = x[e], hi = x[e + 1], h = hi - lo;
    double pint = 0.0, m00 = 0.0, m01 = 0.0, m11 = 0.0;
    const double half = 0.5 * h, mid = 0.5 * (lo + hi);
    for (std::size_t q = 0; q < 8; ++q) {
      const double t = mid + half * quad::GaussLegendre8::nodes[q];
      const double wq = quad::GaussLegendre8::weights[q] * half;
      const double rho = mu.pdf(t);
      const double p = w(t) * rho;
      const double phi1 = (t - lo) / h, phi0 = 1.0 - phi1;
      pint += wq * p;
      m00 += wq * rho * phi0 * phi0;
      m01 += wq * rho * phi0 * phi1;
      m11 += wq * rho * phi1 * phi1;
    }
    const double k = pint / (h * h);
    diag(sb, e) += k;
    diag(sb, e + 1) += k;
    super(sb, e) -= k;
    diag(mb, e) += m00;
    diag(mb, e + 1) += m11;
    super(mb, e) += m01;
  }

  // Keep tridiagonal copies; dsbgvx overwrites the band arrays.
  std::vector<double> s_diag(n), s_off(n - 1), m_diag(n), m_off(n - 1);
  for (lapack_int i = 0; i < n; ++i) {
    s_diag[i] = diag(sb, i);
    m_diag[i] = diag(mb, i);
    if (i + 1 < n) {
      s_off[i] = super(sb, i);
      m_off[i] = super(mb, i);
    }
  }

  const auto want = static_cast<lapack_int>(n_modes + 1);
  std::vector<double> evals(static_cast<std::size_t>(n));
  std::vector<lapack_int> ifail(static_cast<std::size_t>(n));
  lapack_int found = 0;
  double unused = 0.0;
  const lapack_int info = LAPACKE_dsbgvx(LAPACK_COL_MAJOR, 'N', 'I', 'U', n, 1, 1, sb.data(), 2, mb.data(), 2,
                                         &unused, 1, 0.0, 0.0, 1, want, 2.0 * LAPACKE_dlamch('S'), &found,
                                         evals.data(), &unused, 1, ifail.data());
  if (info > n) throw Error(ErrorKind::MassNotSPD, "mass matrix not positive definite; refine the mesh");
  if (info != 0 || found != want)
    throw Error(ErrorKind::NotConverged, "dsbgvx info=" + std::to_string(info));

  auto apply = [&](const std::vector<double>& d, const std::vector<double>& o, const std::vector<double>& v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      r[i] = d[i] * v[i];
      if (i > 0) r[i] += o[i - 1] * v[i - 1];
      if (i + 1 < v.size()) r[i] += o[i] * v[i + 1];
    }
    return r;
  };
  auto dot = [](const std::vector<double>& u, const std::vector<double>& v) {
    double acc = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) acc += u[i] * v[i];
    return acc;
  };

  // Eigenvectors by shifted inverse iteration on the tridiagonal pencil,
  // M-orthogonalized against the lower modes.
  std::vector<std::vector<double>> vecs;
  PoincareBasis1D basis;
  basis.measure_ = mu;
  basis.weight_ = w;
  for (lapack_int j = 0; j < want; ++j) {
    const double lam = evals[j];
    const double gap = std::max(j > 0 ? lam - evals[j - 1] : evals[1] - lam, 1e-300);
    const double shift = lam - 1e-10 * gap;
    std::vector<double> v(n);
    for (lapack_int i = 0; i < n; ++i) v[i] = 1.0 + 0.01 * std::sin(1.0 + 3.7 * i);  // generic start
    for (int it = 0; it < 4; ++it) {
      std::vector<double> rhs = apply(m_diag, m_off, v);
      std::vector<double> dl(n - 1), dd(n), du(n - 1);
      for (lapack_int i = 0; i < n; ++i) {
        dd[i] = s_diag[i] - shift * m_diag[i];
        if (i + 1 < n) dl[i] = du[i] = s_off[i] - shift * m_off[i];
      }
      const lapack_int sinfo = LAPACKE_dgtsv(LAPACK_COL_MAJOR, n, 1, dl.data(), dd.data(), du.data(), rhs.data(), n);
      if (sinfo < 0) throw Error(ErrorKind::NotConverged, "dgtsv failed");
      if (sinfo > 0) break;  // shift hit an eigenvalue exactly; v is already converged
      v = std::move(rhs);
      for (const auto& u : vecs) {
        const double c = dot(u, apply(m_diag, m_off, v));
        for (lapack_int i = 0; i < n; ++i) v[i] -= c * u[i];
      }
      const double norm = std::sqrt(dot(v, apply(m_diag, m_off, v)));
      for (double& vi : v) vi /= norm;
    }
    vecs.push_back(std::move(v));
  }

  // Rayleigh-Ritz on the span of the spline interpolants: the nodal vectors are
  // M-orthonormal for P1 functions, not for the splines that are evaluated.
  basis.fem_eigenvalues_.assign(evals.begin(), evals.begin() + want);
  const auto nm = static_cast<Eigen::Index>(want);
  std::vector<CubicSpline> trial;
  for (const auto& v : vecs) trial.emplace_back(x, v);
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(nm, nm), D = Eigen::MatrixXd::Zero(nm, nm);
  Eigen::VectorXd val(nm), der(nm);
  for (std::size_t e = 0; e < ne; ++e) {
    const double half = 0.5 * (x[e + 1] - x[e]), mid = 0.5 * (x[e + 1] + x[e]);
    for (std::size_t q = 0; q < 8; ++q) {
      const double t = mid + half * quad::GaussLegendre8::nodes[q];
      const double wq = quad::GaussLegendre8::weights[q] * half;
      for (Eigen::Index j = 0; j < nm; ++j) {
        val(j) = trial[static_cast<std::size_t>(j)].value(e, t);
        der(j) = trial[static_cast<std::size_t>(j)].deriv(e, t);
      }
      const double rho = mu.pdf(t);
      G.selfadjointView<Eigen::Lower>().rankUpdate(val, wq * rho);
      D.selfadjointView<Eigen::Lower>().rankUpdate(der, wq * rho * w(t));
    }
  }
  G = G.selfadjointView<Eigen::Lower>();
  D = D.selfadjointView<Eigen::Lower>();
  const Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ritz(D, G);
  if (ritz.info() != Eigen::Success) throw Error(ErrorKind::NotConverged, "spline Ritz step failed");
  for (Eigen::Index j = 0; j < nm; ++j) {
    std::vector<double> v(static_cast<std::size_t>(n), 0.0);
    for (Eigen::Index l = 0; l < nm; ++l) {
      const double c = ritz.eigenvectors()(l, j);
      const auto& u = vecs[static_cast<std::size_t>(l)];
      for (lapack_int i = 0; i < n; ++i) v[i] += c * u[i];
    }
    double sup = 0.0;
    for (double vi : v) sup = std::max(sup, std::abs(vi));
    const double end = v.back();
    const bool flip = (std::abs(end) >= 1e-8 * sup) ? end < 0.0 : (v[n - 1] - v[n - 2]) < 0.0;
    if (flip)
      for (double& vi : v) vi = -vi;
    basis.eigenvalues_.push_back(j == 0 ? std::max(0.0, ritz.eigenvalues()(0)) : ritz.eigenvalues()(j));
    basis.splines_.emplace_back(x, std::move(v));
  }
  basis.mesh_ = std::move(mesh);

  ExistenceReport rep = check_existence(mu, w);
  if (!rep.conclusive())
    basis.warning_ = std::string("ExistenceWarning: cond_i ") + to_string(rep.cond_i.verdict) + ", cond_ii " +
                     to_string(rep.cond_ii.verdict);
  basis.existence_ = std::move(rep);
  return basis;
}

/// Default construction: uniform mesh of n elements, graded at endpoints where
/// w rho vanishes.
inline PoincareBasis1D build_basis(const Measure1D& mu, const Weight1D& w, std::size_t n_modes,
                                   std::size_t mesh_size = 2000) {
  return build_basis_on_mesh(mu, w, n_modes, Mesh1D::for_measure(mu, w, mesh_size));
}

/// Sharp constant of the weighted Poincare inequality, 1 / lambda_1.
inline double poincare_constant(const PoincareBasis1D& basis) { return 1.0 / basis.eigenvalue(1); }

/// CSV with columns x, psi_0..psi_K, dpsi_0..dpsi_K at the mesh nodes.
/// `skip_constant` drops the psi_0 / dpsi_0 columns.
inline void export_basis_csv(const PoincareBasis1D& basis, std::ostream& os, bool skip_constant = false) {
  const std::size_t K = basis.modes();
  const std::size_t first = skip_constant ? 1 : 0;
  os.precision(17);
  os << "x";
  for (std::size_t j = first; j <= K; ++j) os << ",psi_" << j;
  for (std::size_t j = first; j <= K; ++j) os << ",dpsi_" << j;
  os << '\n';
  std::vector<double> v(K + 1), d(K + 1);
  for (double xi : basis.mesh().nodes) {
    basis.eval_all(xi, K, v, d);
    os << xi;
    for (std::size_t j = first; j <= K; ++j) os << ',' << v[j];
    for (std::size_t j = first; j <= K; ++j) os << ',' << d[j];
    os << '\n';
  }
}

inline nlohmann::json eigenvalues_json(const PoincareBasis1D& basis) {
  nlohmann::json j;
  j["eigenvalues"] = basis.eigenvalues();
  j["poincare_constant"] = poincare_constant(basis);
  j["support"] = {basis.a(), basis.b()};
  j["weight"] = basis.weight().label();
  j["family"] = to_string(basis.measure().family());
  if (basis.existence()) {
    j["existence"] = {{"cond_i", to_string(basis.existence()->cond_i.verdict)},
                      {"cond_ii", to_string(basis.existence()->cond_ii.verdict)}};
  }
  if (!basis.warning().empty()) j["warning"] = basis.warning();
  return j;
}

}  // namespace pgsa
