#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "pgsa/measures.hpp"
#include "pgsa/quadrature.hpp"

using namespace pgsa;

namespace {

std::vector<Measure1D> table_measures() {
  return {
      make_measure(Family::Uniform, {7.0, 9.0}),
      make_measure(Family::Triangular, {49.0, 50.0, 51.0}),
      make_measure(Family::Triangular, {55.0, 55.5, 56.0}),
      make_measure(Family::TruncatedGaussian, {30.0, 64.0}, std::pair{15.0, 75.0}),
      make_measure(Family::TruncatedGumbel, {1013.0, 558.0}, std::pair{500.0, 3000.0}),
      make_measure(Family::TruncatedExponential, {1.0}, std::pair{0.0, 3.0}),
  };
}

double integrate(const Measure1D& m, const std::function<double(double)>& f) {
  return quad::adaptive_with_breaks(f, m.a(), m.b(), m.breakpoints());
}

}  // namespace

TEST(Measures, UniformDensityIsFlat) {
  const auto m = make_measure(Family::Uniform, {7.0, 9.0});
  EXPECT_DOUBLE_EQ(m.pdf(7.3), 0.5);
  EXPECT_DOUBLE_EQ(m.pdf(8.9), 0.5);
  EXPECT_EQ(m.pdf(9.5), 0.0);
  EXPECT_NEAR(m.quantile(0.5), 8.0, 1e-12);
}

TEST(Measures, SymmetricTriangles) {
  EXPECT_NEAR(make_measure(Family::Triangular, {49.0, 50.0, 51.0}).mean(), 50.0, 1e-10);
  EXPECT_NEAR(make_measure(Family::Triangular, {54.0, 55.0, 56.0}).quantile(0.5), 55.0, 1e-12);
}

TEST(Measures, GumbelNormalizerMatchesTrapezoid) {
  const auto m = make_measure(Family::TruncatedGumbel, {1013.0, 558.0}, std::pair{500.0, 3000.0});
  const std::size_t n = 1000000;
  const double h = 2500.0 / n;
  auto parent = [](double x) {
    const double z = (x - 1013.0) / 558.0;
    return std::exp(-(z + std::exp(-z))) / 558.0;
  };
  double s = 0.5 * (parent(500.0) + parent(3000.0));
  for (std::size_t i = 1; i < n; ++i) s += parent(500.0 + i * h);
  s *= h;
  EXPECT_NEAR(m.normalizer(), s, 1e-9);
  EXPECT_NEAR(integrate(m, [&](double x) { return m.pdf(x); }), 1.0, 1e-10);
}

TEST(Measures, TruncatedExponentialMedian) {
  const auto m = make_measure(Family::TruncatedExponential, {1.0}, std::pair{0.0, 3.0});
  // bisection oracle on (1 - e^-x) / (1 - e^-3) = 1/2
  double lo = 0.0, hi = 3.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    ((1.0 - std::exp(-mid)) / (1.0 - std::exp(-3.0)) < 0.5 ? lo : hi) = mid;
  }
  EXPECT_NEAR(m.quantile(0.5), 0.5 * (lo + hi), 1e-12);
  EXPECT_NEAR(m.quantile(0.5), -std::log(1.0 - 0.5 * (1.0 - std::exp(-3.0))), 1e-12);
}

TEST(Measures, InvariantsForEveryFamily) {
  for (const auto& m : table_measures()) {
    SCOPED_TRACE(to_string(m.family()));
    EXPECT_NEAR(integrate(m, [&](double x) { return m.pdf(x); }), 1.0, 1e-10);
    EXPECT_NEAR(integrate(m, [&](double x) { return x * m.pdf(x); }), m.mean(), 1e-10 * std::max(1.0, std::abs(m.mean())));
    EXPECT_NEAR(m.cdf(m.a()), 0.0, 1e-15);
    EXPECT_NEAR(m.cdf(m.b()), 1.0, 1e-15);
    double prev = -1.0;
    for (int i = 0; i <= 100; ++i) {
      const double u = i / 100.0;
      const double x = m.quantile(u);
      EXPECT_NEAR(m.cdf(x), u, 1e-10) << "u=" << u;
      EXPECT_GE(x, prev);
      prev = x;
      if (i > 0 && i < 100) EXPECT_GT(m.pdf(x), 0.0);
    }
  }
}

TEST(Measures, RejectsBadParameters) {
  auto kind_of = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::Config;
  };
  EXPECT_EQ(kind_of([] { make_measure(Family::Uniform, {1.0, 1.0}); }), ErrorKind::InvalidParams);
  EXPECT_EQ(kind_of([] { make_measure(Family::Triangular, {0.0, 2.0, 1.0}); }), ErrorKind::InvalidParams);
  EXPECT_EQ(kind_of([] { make_measure(Family::TruncatedGaussian, {0.0, 1.0}); }), ErrorKind::InvalidParams);
  EXPECT_EQ(kind_of([] { make_measure(Family::TruncatedGaussian, {0.0, -1.0}, std::pair{-1.0, 1.0}); }),
            ErrorKind::InvalidParams);
  EXPECT_EQ(kind_of([] { make_measure(Family::TruncatedGaussian, {0.0, 1.0}, std::pair{60.0, 70.0}); }),
            ErrorKind::ZeroMass);
  EXPECT_EQ(kind_of([] { make_measure(Family::TruncatedExponential, {1.0}, std::pair{-3.0, -1.0}); }),
            ErrorKind::ZeroMass);
}

TEST(Measures, FamilyNamesRoundTrip) {
  for (auto f : {Family::Uniform, Family::Triangular, Family::TruncatedGaussian, Family::TruncatedGumbel,
                 Family::TruncatedExponential})
    EXPECT_EQ(family_from_string(to_string(f)), f);
  EXPECT_EQ(family_from_string("normal"), Family::TruncatedGaussian);
  EXPECT_THROW(family_from_string("cauchy"), Error);
}

TEST(Sampling, SingleRowInsideSupport) {
  const auto tm = table_measures();
  const ProductMeasure mu(tm);
  const auto X = sample(mu, 1, 42);
  ASSERT_EQ(X.rows(), 1);
  for (std::size_t k = 0; k < mu.dim(); ++k) {
    EXPECT_GE(X(0, k), mu[k].a());
    EXPECT_LE(X(0, k), mu[k].b());
  }
  EXPECT_THROW(sample(mu, 0, 42), Error);
}

TEST(Sampling, UniformMeanWithinClt) {
  const ProductMeasure mu({make_measure(Family::Uniform, {-1.0, 1.0})});
  EXPECT_NEAR(sample(mu, 1000000, 7).mean(), 0.0, 3e-3);
}

TEST(Sampling, KolmogorovSmirnovPerFamily) {
  const ProductMeasure mu(table_measures());
  const auto X = sample(mu, 100000, 11);
  for (std::size_t k = 0; k < mu.dim(); ++k) {
    std::vector<double> col(X.col(k).data(), X.col(k).data() + X.rows());
    std::sort(col.begin(), col.end());
    double ks = 0.0;
    const double n = static_cast<double>(col.size());
    for (std::size_t i = 0; i < col.size(); ++i) {
      const double F = mu[k].cdf(col[i]);
      ks = std::max({ks, std::abs(F - i / n), std::abs(F - (i + 1) / n)});
    }
    EXPECT_LT(ks, 0.01) << to_string(mu[k].family());
  }
}

TEST(Sampling, DeterministicForSeed) {
  const ProductMeasure mu(table_measures());
  const auto A = sample(mu, 500, 99);
  const auto B = sample(mu, 500, 99);
  EXPECT_TRUE((A.array() == B.array()).all());
  EXPECT_FALSE((A.array() == sample(mu, 500, 100).array()).all());
}
