#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace seqot;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

Matrix mat2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

// Independent gamma: max over quadruples of A_il A_jk / (A_jl A_ik), linear domain.
double brute_gamma(const Matrix& a) {
  double g = 0.0;
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.rows(); ++j)
      for (Index k = 0; k < a.cols(); ++k)
        for (Index l = 0; l < a.cols(); ++l) g = std::max(g, a(i, l) * a(j, k) / (a(j, l) * a(i, k)));
  return g;
}

Vector positive(std::mt19937_64& rng, Index n) {
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = std::exp(u(rng));
  return v;
}

}  // namespace

TEST(Hilbert, ScalarMultipleIsZero) { EXPECT_NEAR(hilbert_metric(vec({1, 2}), vec({3, 6})), 0.0, 1e-15); }

TEST(Hilbert, SwappedEntries) { EXPECT_NEAR(hilbert_metric(vec({1, 2}), vec({2, 1})), std::log(4.0), 1e-15); }

TEST(Hilbert, Identity) { EXPECT_EQ(hilbert_metric(vec({1, 1, 1}), vec({1, 1, 1})), 0.0); }

TEST(Hilbert, Errors) {
  try {
    hilbert_metric(vec({1, 2}), vec({1, 2, 3}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::LengthMismatch);
  }
  try {
    hilbert_metric(vec({1, 0}), vec({1, 2}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NonPositiveEntry);
  }
}

TEST(Hilbert, LogFormAgrees) {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 500; ++t) {
    const Vector u = positive(rng, 5), v = positive(rng, 5);
    EXPECT_NEAR(hilbert_metric_log(u.array().log().matrix(), v.array().log().matrix()), hilbert_metric(u, v), 1e-12);
  }
}

TEST(Hilbert, SymmetricTriangleScaleInvariant) {
  std::mt19937_64 rng(22);
  std::uniform_int_distribution<Index> dim(1, 8);
  for (int t = 0; t < 2000; ++t) {
    const Index n = dim(rng);
    const Vector u = positive(rng, n), v = positive(rng, n), w = positive(rng, n);
    EXPECT_NEAR(hilbert_metric(u, v), hilbert_metric(v, u), 1e-12);
    EXPECT_LE(hilbert_metric(u, w), hilbert_metric(u, v) + hilbert_metric(v, w) + 1e-12);
    EXPECT_NEAR(hilbert_metric(w.cwiseProduct(u), w.cwiseProduct(v)), hilbert_metric(u, v), 1e-12);
    EXPECT_NEAR(hilbert_metric(3.7 * u, v), hilbert_metric(u, v), 1e-12);
    EXPECT_GE(hilbert_metric(u, v), 0.0);
  }
}

TEST(Hilbert, QuotientTriangle) {
  std::mt19937_64 rng(23);
  for (int t = 0; t < 2000; ++t) {
    const Vector u = positive(rng, 4), v = positive(rng, 4), w = positive(rng, 4), x = positive(rng, 4);
    EXPECT_LE(hilbert_metric(u.cwiseQuotient(x), v.cwiseQuotient(w)),
              hilbert_metric(u, v) + hilbert_metric(w, x) + 1e-12);
  }
}

TEST(Birkhoff, AllOnesGammaIsOne) { EXPECT_NEAR(birkhoff_gamma(Matrix::Ones(3, 3)), 1.0, 1e-15); }

TEST(Birkhoff, SmallExamples) {
  EXPECT_NEAR(birkhoff_gamma(mat2(1, 1, 1, 2)), 2.0, 1e-14);
  EXPECT_NEAR(birkhoff_gamma(mat2(10, 1, 1, 10)), 100.0, 1e-12);
  EXPECT_NEAR(birkhoff_gamma(mat2(1, 1, 1, 2)), brute_gamma(mat2(1, 1, 1, 2)), 1e-14);
}

TEST(Birkhoff, Lambda) {
  EXPECT_NEAR(birkhoff_lambda(Matrix::Ones(3, 4)), 0.0, 1e-15);
  const double s2 = std::sqrt(2.0);
  EXPECT_NEAR(birkhoff_lambda(mat2(1, 1, 1, 2)), (s2 - 1.0) / (s2 + 1.0), 1e-14);
  EXPECT_NEAR(birkhoff_lambda(mat2(1, 1, 1, 2)), 0.171573, 1e-6);
  EXPECT_NEAR(birkhoff_lambda(mat2(10, 1, 1, 10)), 9.0 / 11.0, 1e-14);
}

TEST(Birkhoff, GammaMatchesIndependentFormula) {
  std::mt19937_64 rng(24);
  std::uniform_int_distribution<Index> dim(1, 6);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int t = 0; t < 300; ++t) {
    Matrix a(dim(rng), dim(rng));
    for (Index i = 0; i < a.size(); ++i) a.data()[i] = std::exp(u(rng));
    const double g = brute_gamma(a);
    EXPECT_NEAR(birkhoff_gamma(a), g, 1e-12 * g);
    EXPECT_GE(birkhoff_gamma(a), 1.0 - 1e-15);
    const double lam = birkhoff_lambda(a);
    EXPECT_NEAR(lam, (std::sqrt(g) - 1.0) / (std::sqrt(g) + 1.0), 1e-12);
    EXPECT_GE(lam, 0.0);
    EXPECT_LT(lam, 1.0);
  }
}

TEST(Birkhoff, HugeRatiosStayFinite) {
  Matrix log_a(2, 2);
  log_a << 0.0, -2000.0, -2000.0, 0.0;
  EXPECT_NEAR(birkhoff_log_gamma(log_a), 4000.0, 1e-9);
  EXPECT_EQ(birkhoff_lambda_from_log_gamma(4000.0), 1.0);
}

TEST(Birkhoff, RejectsNonPositiveEntries) {
  EXPECT_THROW(birkhoff_gamma(mat2(1, 0, 1, 1)), Error);
}

TEST(Birkhoff, ContractsHilbertMetric) {
  std::mt19937_64 rng(25);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int t = 0; t < 1000; ++t) {
    Matrix a(3, 4);
    for (Index i = 0; i < a.size(); ++i) a.data()[i] = std::exp(u(rng));
    const Vector x = positive(rng, 4), y = positive(rng, 4);
    EXPECT_LE(hilbert_metric(a * x, a * y), birkhoff_lambda(a) * hilbert_metric(x, y) + 1e-12);
  }
}

TEST(KL, Examples) {
  EXPECT_EQ(kl_divergence(vec({0.5, 0.5}), vec({0.5, 0.5})), 0.0);
  EXPECT_NEAR(kl_divergence(vec({0.5, 0.5}), vec({0.25, 0.75})), 0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0),
              1e-15);
  EXPECT_NEAR(kl_divergence(vec({0.5, 0.5}), vec({0.25, 0.75})), 0.143841, 1e-6);
  EXPECT_NEAR(kl_divergence(vec({1, 0}), vec({0.5, 0.5})), std::log(2.0), 1e-15);
}

TEST(KL, ZeroDenominatorWithMass) {
  try {
    kl_divergence(vec({0.5, 0.5}), vec({1, 0}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ZeroDenominatorWithPositiveMass);
  }
}

TEST(KL, NonNegativeOnDistributions) {
  std::mt19937_64 rng(26);
  for (int t = 0; t < 500; ++t) {
    const Vector c = random_simplex(rng, 5), d = random_simplex(rng, 5);
    EXPECT_GE(kl_divergence(c, d), -1e-15);
  }
}

TEST(L1, Examples) {
  EXPECT_EQ(l1_distance(vec({0.3, 0.7}), vec({0.3, 0.7})), 0.0);
  EXPECT_EQ(l1_distance(vec({1, 0}), vec({0, 1})), 2.0);
  EXPECT_NEAR(l1_distance(vec({0.7, 0.3}), vec({0.6, 0.4})), 0.2, 1e-15);
  EXPECT_THROW(l1_distance(vec({1}), vec({1, 2})), Error);
}
