#include "sgcweak/hermite_quadrature.hpp"

#include <cmath>

#include <gtest/gtest.h>

namespace sgcweak {
namespace {

double monomial_quadrature(const QuadratureRule& rule, int p) {
  return quadrature_sum(rule, [p](double y) { return std::pow(y, p); });
}

TEST(GaussianMoment, DoubleFactorials) {
  EXPECT_EQ(gaussian_moment(0), 1.0);
  EXPECT_EQ(gaussian_moment(1), 0.0);
  EXPECT_EQ(gaussian_moment(4), 3.0);
  EXPECT_EQ(gaussian_moment(7), 0.0);
  EXPECT_EQ(gaussian_moment(8), 105.0);
  EXPECT_THROW(gaussian_moment(-1), InvalidArgument);
}

TEST(GaussHermiteRule, OnePointRuleIsTheMean) {
  const auto rule = gauss_hermite_rule(1);
  ASSERT_EQ(rule.size(), 1);
  EXPECT_EQ(rule.nodes(0), 0.0);
  EXPECT_EQ(rule.weights(0), 1.0);
}

TEST(GaussHermiteRule, TwoPointRuleIsTheCoinFlip) {
  const auto rule = gauss_hermite_rule(2);
  EXPECT_NEAR(rule.nodes(0), -1.0, 1e-15);
  EXPECT_NEAR(rule.nodes(1), 1.0, 1e-15);
  EXPECT_NEAR(rule.weights(0), 0.5, 1e-15);
  EXPECT_NEAR(rule.weights(1), 0.5, 1e-15);
}

TEST(GaussHermiteRule, ThreePointRule) {
  const auto rule = gauss_hermite_rule(3);
  EXPECT_NEAR(rule.nodes(0), -std::sqrt(3.0), 1e-14);
  EXPECT_EQ(rule.nodes(1), 0.0);
  EXPECT_NEAR(rule.nodes(2), std::sqrt(3.0), 1e-14);
  EXPECT_NEAR(rule.weights(0), 1.0 / 6.0, 1e-15);
  EXPECT_NEAR(rule.weights(1), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(rule.weights(2), 1.0 / 6.0, 1e-15);
}

TEST(GaussHermiteRule, FivePointEighthMoment) {
  EXPECT_NEAR(monomial_quadrature(gauss_hermite_rule(5), 8), 105.0, 1e-10);
}

TEST(GaussHermiteRule, RejectsOrdersOutsideRange) {
  EXPECT_THROW(gauss_hermite_rule(0), InvalidArgument);
  EXPECT_THROW(gauss_hermite_rule(65), InvalidArgument);
  EXPECT_NO_THROW(gauss_hermite_rule(64));
}

TEST(GaussHermiteRule, StructuralInvariantsUpTo64) {
  for (int n = 1; n <= kMaxHermiteOrder; ++n) {
    const auto rule = gauss_hermite_rule(n);
    ASSERT_EQ(rule.size(), n);
    EXPECT_NEAR(rule.weights.sum(), 1.0, 1e-14) << "n=" << n;
    for (int k = 0; k < n; ++k) {
      EXPECT_GT(rule.weights(k), 0.0);
      EXPECT_NEAR(rule.nodes(k), -rule.nodes(n - 1 - k), 1e-13);
      if (k > 0) EXPECT_LT(rule.nodes(k - 1), rule.nodes(k));
    }
  }
}

TEST(GaussHermiteRule, RootsOfHermitePolynomial) {
  // Independent check: He_n via the monic recurrence He_{k+1} = y He_k - k He_{k-1}.
  for (int n : {4, 9, 16, 30}) {
    const auto rule = gauss_hermite_rule(n);
    for (int k = 0; k < n; ++k) {
      const double y = rule.nodes(k);
      double prev = 1.0, cur = y, prev_d = 0.0, cur_d = 1.0;
      for (int j = 1; j < n; ++j) {
        const double next = y * cur - j * prev;
        const double next_d = cur + y * cur_d - j * prev_d;
        prev = cur;
        cur = next;
        prev_d = cur_d;
        cur_d = next_d;
      }
      // Newton correction size is the distance to the true root.
      EXPECT_LT(std::abs(cur / cur_d), 1e-13) << "n=" << n << " k=" << k;
    }
  }
}

TEST(GaussHermiteRule, WeightsMatchHermiteFormula) {
  // w = n! / (n^2 He_{n-1}(y)^2)
  for (int n : {3, 6, 12}) {
    const auto rule = gauss_hermite_rule(n);
    double factorial = 1.0;
    for (int j = 2; j <= n; ++j) factorial *= j;
    for (int k = 0; k < n; ++k) {
      const double y = rule.nodes(k);
      double prev = 1.0, cur = y;
      for (int j = 1; j < n - 1; ++j) {
        const double next = y * cur - j * prev;
        prev = cur;
        cur = next;
      }
      const double hn1 = (n == 1) ? 1.0 : cur;
      EXPECT_NEAR(rule.weights(k), factorial / (n * n * hn1 * hn1), 1e-14);
    }
  }
}

TEST(GaussHermiteRule, ExactnessDegreeAndFirstFailure) {
  for (int n = 1; n <= 20; ++n) {
    const auto rule = gauss_hermite_rule(n);
    for (int p = 0; p <= 2 * n - 1; ++p) {
      const double exact = gaussian_moment(p);
      const double tol = (p % 2 == 0) ? 1e-12 * exact : 1e-12 * gaussian_moment(p + 1);
      EXPECT_NEAR(monomial_quadrature(rule, p), exact, tol) << "n=" << n << " p=" << p;
    }
    const double defect = gaussian_moment(2 * n) - monomial_quadrature(rule, 2 * n);
    EXPECT_GT(std::abs(defect), 1e-6 * gaussian_moment(2 * n)) << "n=" << n;
  }
}

TEST(GaussHermiteRule, Deterministic) {
  const auto a = gauss_hermite_rule(37);
  const auto b = gauss_hermite_rule(37);
  for (int k = 0; k < 37; ++k) {
    EXPECT_EQ(a.nodes(k), b.nodes(k));
    EXPECT_EQ(a.weights(k), b.weights(k));
  }
}

TEST(GaussHermiteRule, LongDoubleInstantiation) {
  const auto rule = gauss_hermite_rule<long double>(4);
  long double m4 = 0;
  for (int k = 0; k < 4; ++k) m4 += rule.weights(k) * std::pow(rule.nodes(k), 4);
  EXPECT_NEAR(static_cast<double>(m4), 3.0, 1e-15);
}

}  // namespace
}  // namespace sgcweak
