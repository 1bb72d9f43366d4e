#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pgsa/error.hpp"
#include "pgsa/measures.hpp"

namespace pgsa {

/// A test model with its input distribution and analytic gradient.
struct BenchmarkModel {
  std::string name;
  std::vector<std::string> variables;
  ProductMeasure inputs;
  std::function<double(const Eigen::Ref<const Eigen::RowVectorXd>&)> eval;
  std::function<void(const Eigen::Ref<const Eigen::RowVectorXd>&, Eigen::Ref<Eigen::RowVectorXd>)> grad;

  std::size_t dim() const { return inputs.dim(); }

  Eigen::VectorXd eval_rows(const Eigen::MatrixXd& X) const {
    Eigen::VectorXd y(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) y(i) = eval(X.row(i));
    return y;
  }
  Eigen::MatrixXd grad_rows(const Eigen::MatrixXd& X) const {
    Eigen::MatrixXd G(X.rows(), X.cols());
    Eigen::RowVectorXd g(X.cols());
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      grad(X.row(i), g);
      G.row(i) = g;
    }
    return G;
  }
};

/// f(x) = prod_k (d/4) / (d/4 + (x_k - a_k)^2),  a_k = (-1)^k / (k+1),  x ~ U(-1,1)^d.
inline BenchmarkModel toy_model(std::size_t d = 4) {
  if (d < 1) throw Error(ErrorKind::InvalidParams, "toy model needs d >= 1");
  std::vector<Measure1D> comps;
  std::vector<double> shift(d);
  BenchmarkModel m;
  for (std::size_t k = 1; k <= d; ++k) {
    comps.push_back(make_measure(Family::Uniform, {-1.0, 1.0}));
    shift[k - 1] = ((k % 2 == 0) ? 1.0 : -1.0) / static_cast<double>(k + 1);
    m.variables.push_back("X" + std::to_string(k));
  }
  m.name = "toy";
  m.inputs = ProductMeasure(std::move(comps));
  const double q = static_cast<double>(d) / 4.0;
  m.eval = [shift, q](const Eigen::Ref<const Eigen::RowVectorXd>& x) {
    double f = 1.0;
    for (std::size_t k = 0; k < shift.size(); ++k) {
      const double t = x(static_cast<Eigen::Index>(k)) - shift[k];
      f *= q / (q + t * t);
    }
    return f;
  };
  m.grad = [shift, q, f = m.eval](const Eigen::Ref<const Eigen::RowVectorXd>& x, Eigen::Ref<Eigen::RowVectorXd> g) {
    const double fx = f(x);
    for (std::size_t k = 0; k < shift.size(); ++k) {
      const double t = x(static_cast<Eigen::Index>(k)) - shift[k];
      g(static_cast<Eigen::Index>(k)) = fx * (-2.0 * t / (q + t * t));
    }
  };
  return m;
}

/// Annual dyke maintenance cost. Inputs in order Q, Ks, Zv, Zm, Hd, Cb, L, B.
///   S = Zv - Hd - Cb + (Q / (B Ks) sqrt(L / (Zm - Zv)))^(3/5)
///   C = 1{S>0} + (0.2 + 0.8 (1 - exp(-1000 / S^4))) 1{S<=0} + max(Hd, 8) / 20
/// Gradients use the right-sided derivative at the kinks S = 0 and Hd = 8.
inline BenchmarkModel flood_model() {
  BenchmarkModel m;
  m.name = "flood";
  m.variables = {"Q", "Ks", "Zv", "Zm", "Hd", "Cb", "L", "B"};
  m.inputs = ProductMeasure({
      make_measure(Family::TruncatedGumbel, {1013.0, 558.0}, std::pair{500.0, 3000.0}),
      make_measure(Family::TruncatedGaussian, {30.0, 64.0}, std::pair{15.0, 75.0}),
      make_measure(Family::Triangular, {49.0, 50.0, 51.0}),
      make_measure(Family::Triangular, {54.0, 55.0, 56.0}),
      make_measure(Family::Uniform, {7.0, 9.0}),
      make_measure(Family::Triangular, {55.0, 55.5, 56.0}),
      make_measure(Family::Triangular, {4990.0, 5000.0, 5010.0}),
      make_measure(Family::Triangular, {295.0, 300.0, 305.0}),
  });
  auto overflow = [](const Eigen::Ref<const Eigen::RowVectorXd>& x, double& head) {
    const double Q = x(0), Ks = x(1), Zv = x(2), Zm = x(3), Hd = x(4), Cb = x(5), L = x(6), B = x(7);
    if (!(Zm > Zv)) throw Error(ErrorKind::DomainError, "flood model needs Zm > Zv");
    head = std::pow(Q / (B * Ks) * std::sqrt(L / (Zm - Zv)), 0.6);
    return Zv - Hd - Cb + head;
  };
  m.eval = [overflow](const Eigen::Ref<const Eigen::RowVectorXd>& x) {
    double head = 0.0;
    const double S = overflow(x, head);
    double c = std::max(x(4), 8.0) / 20.0;
    if (S > 0.0)
      c += 1.0;
    else
      c += 0.2 + 0.8 * (1.0 - std::exp(-1000.0 / (S * S * S * S)));
    return c;
  };
  m.grad = [overflow](const Eigen::Ref<const Eigen::RowVectorXd>& x, Eigen::Ref<Eigen::RowVectorXd> g) {
    double h = 0.0;
    const double S = overflow(x, h);
    const double Q = x(0), Ks = x(1), Zv = x(2), Zm = x(3), Hd = x(4), L = x(6), B = x(7);
    double dCdS = 0.0;
    if (S < 0.0) {
      const double s4 = S * S * S * S;
      dCdS = -3200.0 * std::exp(-1000.0 / s4) / (s4 * S);
    }
    const double dz = Zm - Zv;
    g(0) = dCdS * 0.6 * h / Q;
    g(1) = dCdS * (-0.6 * h / Ks);
    g(2) = dCdS * (1.0 + 0.3 * h / dz);
    g(3) = dCdS * (-0.3 * h / dz);
    g(4) = -dCdS + (Hd >= 8.0 ? 0.05 : 0.0);
    g(5) = -dCdS;
    g(6) = dCdS * 0.3 * h / L;
    g(7) = dCdS * (-0.6 * h / B);
  };
  return m;
}

inline BenchmarkModel model_by_name(const std::string& name, std::size_t toy_dim = 4) {
  if (name == "toy") return toy_model(toy_dim);
  if (name == "flood") return flood_model();
  throw Error(ErrorKind::Config, "unknown model '" + name + "'");
}

struct SobolEstimate {
  std::vector<double> total;
  std::vector<double> std_error;  // Monte Carlo standard error of each index
  double variance = 0.0;
};

/// Jansen pick-freeze estimator of total Sobol' indices: two independent
/// n_mc x d blocks A, B; for each k the matrix A with column k taken from B.
///   S_k^tot = mean((f(A) - f(A_B^k))^2) / (2 Var f).
/// Independent of any chaos machinery.
inline SobolEstimate reference_sobol(const std::function<double(const Eigen::Ref<const Eigen::RowVectorXd>&)>& f,
                                     const ProductMeasure& mu, std::size_t n_mc, std::uint64_t seed) {
  if (n_mc < 10000) throw Error(ErrorKind::InvalidParams, "reference_sobol needs n_mc >= 1e4");
  const std::size_t d = mu.dim();
  const Eigen::MatrixXd A = sample(mu, n_mc, split_seed(seed, 0));
  const Eigen::MatrixXd B = sample(mu, n_mc, split_seed(seed, 1));
  Eigen::VectorXd fa(static_cast<Eigen::Index>(n_mc)), fb(static_cast<Eigen::Index>(n_mc));
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    fa(i) = f(A.row(i));
    fb(i) = f(B.row(i));
  }
  const double mean = 0.5 * (fa.mean() + fb.mean());
  const double var = 0.5 * ((fa.array() - mean).square().mean() + (fb.array() - mean).square().mean());
  SobolEstimate est;
  est.variance = var;
  Eigen::RowVectorXd row(static_cast<Eigen::Index>(d));
  for (std::size_t k = 0; k < d; ++k) {
    double s1 = 0.0, s2 = 0.0;
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
      row = A.row(i);
      row(static_cast<Eigen::Index>(k)) = B(i, static_cast<Eigen::Index>(k));
      const double diff = fa(i) - f(row);
      const double term = 0.5 * diff * diff;
      s1 += term;
      s2 += term * term;
    }
    const double n = static_cast<double>(n_mc);
    const double m1 = s1 / n;
    const double sd = std::sqrt(std::max(0.0, s2 / n - m1 * m1) / n);
    est.total.push_back(var > 0.0 ? m1 / var : 0.0);
    est.std_error.push_back(var > 0.0 ? sd / var : 0.0);
  }
  return est;
}

inline SobolEstimate reference_sobol(const BenchmarkModel& model, std::size_t n_mc, std::uint64_t seed) {
  return reference_sobol(model.eval, model.inputs, n_mc, seed);
}

}  // namespace pgsa
