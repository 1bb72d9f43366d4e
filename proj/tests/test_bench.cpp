#include <gtest/gtest.h>

#include <cmath>

#include "pgsa/bench.hpp"

using namespace pgsa;

namespace {

// Central differences, skipping points where the step would cross a kink.
void check_gradient(const BenchmarkModel& m, const Eigen::MatrixXd& X, double h_rel,
                    const std::function<bool(const Eigen::RowVectorXd&)>& smooth) {
  Eigen::RowVectorXd g(static_cast<Eigen::Index>(m.dim()));
  int checked = 0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const Eigen::RowVectorXd x = X.row(i);
    if (!smooth(x)) continue;
    m.grad(x, g);
    for (Eigen::Index k = 0; k < x.size(); ++k) {
      const double h = h_rel * std::max(1.0, std::abs(x(k)));
      Eigen::RowVectorXd xp = x, xm = x;
      xp(k) += h;
      xm(k) -= h;
      const double fd = (m.eval(xp) - m.eval(xm)) / (2 * h);
      EXPECT_NEAR(fd, g(k), 1e-6 * std::max(std::abs(g(k)), 1e-6 * std::abs(m.eval(x)) + 1e-12))
          << m.name << " row " << i << " var " << k;
    }
    ++checked;
  }
  EXPECT_GE(checked, 50);
}

double flood_S(double Q, double Ks, double Zv, double Zm, double Hd, double Cb, double L, double B) {
  return Zv - Hd - Cb + std::pow((Q / (B * Ks)) * std::sqrt(L / (Zm - Zv)), 3.0 / 5.0);
}

}  // namespace

TEST(Toy, MaximumAtShifts) {
  const auto m = toy_model(4);
  Eigen::RowVectorXd a(4);
  for (int k = 1; k <= 4; ++k) a(k - 1) = std::pow(-1.0, k) / (k + 1.0);
  EXPECT_DOUBLE_EQ(m.eval(a), 1.0);
  Eigen::RowVectorXd g(4);
  m.grad(a, g);
  EXPECT_EQ(g.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(m.variables.size(), 4u);
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_EQ(m.inputs[k].a(), -1.0);
    EXPECT_EQ(m.inputs[k].b(), 1.0);
  }
}

TEST(Toy, GradientMatchesFiniteDifferences) {
  for (std::size_t d : {1u, 4u, 6u}) {
    const auto m = toy_model(d);
    check_gradient(m, sample(m.inputs, 100, 3), 1e-6, [](const Eigen::RowVectorXd&) { return true; });
  }
}

TEST(Flood, TranscriptionAtNominalPoint) {
  const auto m = flood_model();
  Eigen::RowVectorXd x(8);
  x << 1013.0, 30.0, 50.0, 55.0, 8.0, 55.5, 5000.0, 300.0;
  const double S = flood_S(1013.0, 30.0, 50.0, 55.0, 8.0, 55.5, 5000.0, 300.0);
  const double C = (S > 0 ? 1.0 : 0.2 + 0.8 * (1.0 - std::exp(-1000.0 / std::pow(S, 4)))) + std::max(8.0, 8.0) / 20.0;
  EXPECT_LT(S, 0.0);
  EXPECT_NEAR(m.eval(x), C, 1e-14);
  x << 3000.0, 15.0, 51.0, 55.0, 1.0, 50.0, 5000.0, 300.0;  // overflow
  EXPECT_GT(flood_S(3000.0, 15.0, 51.0, 55.0, 1.0, 50.0, 5000.0, 300.0), 0.0);
  EXPECT_NEAR(m.eval(x), 1.0 + 0.4, 1e-14);
  EXPECT_EQ(m.variables, (std::vector<std::string>{"Q", "Ks", "Zv", "Zm", "Hd", "Cb", "L", "B"}));
}

TEST(Flood, GradientMatchesFiniteDifferencesAwayFromKinks) {
  const auto m = flood_model();
  check_gradient(m, sample(m.inputs, 100, 17), 1e-7, [](const Eigen::RowVectorXd& x) {
    const double S = flood_S(x(0), x(1), x(2), x(3), x(4), x(5), x(6), x(7));
    return std::abs(S) > 0.1 && std::abs(x(4) - 8.0) > 0.01;
  });
}

TEST(Flood, LengthDerivativeSign) {
  const auto m = flood_model();
  const auto X = sample(m.inputs, 200, 5);
  Eigen::RowVectorXd g(8);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    m.grad(X.row(i), g);
    EXPECT_GE(g(6), 0.0);   // dS/dL > 0 and dC/dS >= 0
    EXPECT_LE(g(5), 0.0);   // dS/dCb = -1
  }
}

TEST(Flood, DomainError) {
  const auto m = flood_model();
  Eigen::RowVectorXd x(8);
  x << 1013.0, 30.0, 55.0, 55.0, 8.0, 55.5, 5000.0, 300.0;
  try {
    m.eval(x);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DomainError);
  }
}

TEST(Models, ByName) {
  EXPECT_EQ(model_by_name("toy", 3).dim(), 3u);
  EXPECT_EQ(model_by_name("flood").dim(), 8u);
  EXPECT_THROW(model_by_name("ishigami"), Error);
}

TEST(PickFreeze, AnalyticFunctions) {
  const ProductMeasure mu({make_measure(Family::Uniform, {-1.0, 1.0}), make_measure(Family::Uniform, {-1.0, 1.0})});
  const auto add = reference_sobol([](const Eigen::Ref<const Eigen::RowVectorXd>& x) { return x(0) + x(1); }, mu,
                                   100000, 1);
  for (std::size_t k = 0; k < 2; ++k) EXPECT_NEAR(add.total[k], 0.5, 3.0 * add.std_error[k]);
  const auto prod = reference_sobol([](const Eigen::Ref<const Eigen::RowVectorXd>& x) { return x(0) * x(1); }, mu,
                                    100000, 2);
  for (std::size_t k = 0; k < 2; ++k) EXPECT_NEAR(prod.total[k], 1.0, 3.0 * prod.std_error[k]);
  EXPECT_THROW(reference_sobol([](const Eigen::Ref<const Eigen::RowVectorXd>&) { return 0.0; }, mu, 999, 1), Error);
}

TEST(PickFreeze, ToyModelSeedsAgree) {
  const auto m = toy_model(4);
  const auto a = reference_sobol(m, 1000000, 11);
  const auto b = reference_sobol(m, 1000000, 12);
  for (std::size_t k = 0; k < 4; ++k) {
    const double se = std::hypot(a.std_error[k], b.std_error[k]);
    EXPECT_LE(std::abs(a.total[k] - b.total[k]), 3.0 * se) << k;
  }
  const auto again = reference_sobol(m, 10000, 11);
  EXPECT_EQ(again.total, reference_sobol(m, 10000, 11).total);
}
