// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <thread>
#include <vector>

#include <gtest/gtest.h>

#include "qsurv/quadrature.hpp"

using namespace qsurv;

namespace {

// P_6 from its monomial coefficients: (231x^6 - 315x^4 + 105x^2 - 5) / 16.
double p6(double x) { return (231 * std::pow(x, 6) - 315 * std::pow(x, 4) + 105 * x * x - 5) / 16.0; }
double dp6(double x) { return (6 * 231 * std::pow(x, 5) - 4 * 315 * std::pow(x, 3) + 2 * 105 * x) / 16.0; }

}  // namespace

TEST(Legendre, LowOrders) {
  const auto p0 = legendre_eval(0, 0.7);
  EXPECT_EQ(p0.value, 1.0);
  EXPECT_EQ(p0.derivative, 0.0);
  const auto p2 = legendre_eval(2, 0.5);
  EXPECT_DOUBLE_EQ(p2.value, -0.125);
  EXPECT_DOUBLE_EQ(p2.derivative, 1.5);
}

TEST(Legendre, SixthOrderMatchesMonomialExpansion) {
  for (double x : {-0.9, -0.3, 0.0, 0.3, 0.77}) {
    const auto lv = legendre_eval(6, x);
    EXPECT_NEAR(lv.value, p6(x), 1e-14) << x;
    EXPECT_NEAR(lv.derivative, dp6(x), 1e-13) << x;
  }
}

TEST(Legendre, Endpoints) {
  for (std::size_t k = 0; k <= 12; ++k) {
    const auto hi = legendre_eval(k, 1.0);
    const auto lo = legendre_eval(k, -1.0);
    const double kk = static_cast<double>(k);
    EXPECT_EQ(hi.value, 1.0);
    EXPECT_EQ(lo.value, k % 2 == 0 ? 1.0 : -1.0);
    EXPECT_DOUBLE_EQ(hi.derivative, kk * (kk + 1) / 2);
    EXPECT_DOUBLE_EQ(lo.derivative, (k % 2 == 1 ? 1.0 : -1.0) * kk * (kk + 1) / 2);
  }
}

TEST(Rule, OrderOneAndTwo) {
  const auto r1 = build_rule(1);
  ASSERT_EQ(r1.order, 1u);
  EXPECT_EQ(r1.canonical_nodes[0], 0.0);
  EXPECT_DOUBLE_EQ(r1.weights[0], 2.0);
  EXPECT_DOUBLE_EQ(r1.unit_nodes[0], 0.5);

  const auto r2 = build_rule(2);
  EXPECT_NEAR(r2.canonical_nodes[0], -1.0 / std::sqrt(3.0), 1e-15);
  EXPECT_NEAR(r2.canonical_nodes[1], 1.0 / std::sqrt(3.0), 1e-15);
  EXPECT_NEAR(r2.weights[0], 1.0, 1e-15);
  EXPECT_NEAR(r2.weights[1], 1.0, 1e-15);
}

TEST(Rule, OrderFiveMatchesHighPrecisionOracle) {
  // 50-digit roots of P_5 and weights 2 / ((1 - x^2) P_5'(x)^2).
  const double nodes[5] = {-0.9061798459386639927976269, -0.5384693101056830910363144, 0.0,
                           0.5384693101056830910363144, 0.9061798459386639927976269};
  const double weights[5] = {0.236926885056189087514264, 0.4786286704993664680412915, 128.0 / 225.0,
                             0.4786286704993664680412915, 0.236926885056189087514264};
  const auto r = build_rule(5);
  for (int i = 0; i < 5; ++i) {
    EXPECT_NEAR(r.canonical_nodes[i], nodes[i], 1e-12);
    EXPECT_NEAR(r.weights[i], weights[i], 1e-12);
  }
}

TEST(Rule, InvariantsHoldForEveryOrder) {
  for (std::size_t k = 1; k <= kMaxQuadratureOrder; ++k) {
    const auto r = build_rule(k);
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      const double x = r.canonical_nodes[i];
      sum += r.weights[i];
      EXPECT_GT(r.weights[i], 0.0);
      EXPECT_LT(std::abs(legendre_eval(k, x).value), 1e-12) << "K=" << k << " i=" << i;
      const double d = legendre_eval(k, x).derivative;
      EXPECT_NEAR(r.weights[i], 2.0 / ((1 - x * x) * d * d), 1e-12);
      EXPECT_NEAR(x, -r.canonical_nodes[k - 1 - i], 1e-12);
      EXPECT_NEAR(r.unit_nodes[i], 0.5 * (x + 1.0), 1e-15);
      EXPECT_GT(r.unit_nodes[i], 0.0);
      EXPECT_LT(r.unit_nodes[i], 1.0);
      if (i > 0) {
        EXPECT_LT(r.canonical_nodes[i - 1], x);
      }
    }
    EXPECT_NEAR(sum, 2.0, 1e-12) << "K=" << k;
  }
}

TEST(Rule, RejectsInvalidOrders) {
  EXPECT_THROW(build_rule(0), InvalidOrderError);
  EXPECT_THROW(build_rule(65), InvalidOrderError);
  EXPECT_THROW(gauss_legendre(0), InvalidOrderError);
  try {
    build_rule(0);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::usage);
  }
}

TEST(Rule, DeterministicAndCached) {
  const auto a = build_rule(17);
  const auto b = build_rule(17);
  EXPECT_EQ(a.canonical_nodes, b.canonical_nodes);
  EXPECT_EQ(a.weights, b.weights);
  EXPECT_EQ(&gauss_legendre(9), &gauss_legendre(9));
  EXPECT_EQ(gauss_legendre(17).weights, a.weights);
}

TEST(Rule, CacheIsSafeAcrossThreads) {
  std::vector<std::thread> workers;
  std::vector<const QuadratureRule*> seen(8);
  for (int i = 0; i < 8; ++i) workers.emplace_back([&, i] { seen[i] = &gauss_legendre(33); });
  for (auto& w : workers) w.join();
  for (auto* p : seen) EXPECT_EQ(p, seen[0]);
}

TEST(CumulativeHazard, ConstantHazard) {
  for (std::size_t k = 1; k <= 10; ++k) {
    EXPECT_NEAR(cumulative_hazard(gauss_legendre(k), [](double) { return 3.0; }, 2.0), 6.0, 1e-13);
  }
}

TEST(CumulativeHazard, CubicIsExactWithTwoNodes) {
  EXPECT_NEAR(cumulative_hazard(gauss_legendre(2), [](double s) { return s * s * s; }, 1.0), 0.25, 1e-15);
}

TEST(CumulativeHazard, ExactAtZero) {
  EXPECT_EQ(cumulative_hazard(gauss_legendre(4), [](double) { return 1e300; }, 0.0), 0.0);
}

TEST(CumulativeHazard, MonomialExactness) {
  for (std::size_t k = 1; k <= 8; ++k) {
    for (int d = 0; d <= static_cast<int>(2 * k - 1); ++d) {
      for (double t : {0.5, 1.0, 3.0}) {
        const double got = cumulative_hazard(gauss_legendre(k), [d](double s) { return std::pow(s, d); }, t);
        const double exact = std::pow(t, d + 1) / (d + 1);
        EXPECT_LT(std::abs(got - exact), 1e-13 * std::max(1.0, exact)) << "K=" << k << " d=" << d << " t=" << t;
      }
    }
  }
}

TEST(CumulativeHazard, ExponentialWithinBound) {
  const auto& r = gauss_legendre(3);
  const double got = cumulative_hazard(r, [](double s) { return std::exp(s); }, 1.0);
  const double err = std::abs(got - (std::numbers::e - 1.0));
  EXPECT_GT(err, 0.0);
  EXPECT_LE(err, error_bound(r, 1.0, std::numbers::e));
}

TEST(CumulativeHazard, BoundHoldsOnGrid) {
  for (std::size_t k : {2, 3, 4, 5}) {
    for (double t : {0.5, 1.0, 2.0}) {
      const auto& r = gauss_legendre(k);
      const double err = std::abs(cumulative_hazard(r, [](double s) { return std::exp(s); }, t) - std::expm1(t));
      // Allow a few ulps of rounding once the truncation error is below machine precision.
      const double rounding = 8.0 * std::numeric_limits<double>::epsilon() * std::expm1(t);
      EXPECT_LE(err, error_bound(r, t, std::exp(t)) + rounding) << "K=" << k << " t=" << t;
    }
  }
}

TEST(CumulativeHazard, SinusoidErrorNonIncreasing) {
  auto hazard = [](double s) { return 1.0 + 0.8 * std::sin(4.0 * s); };
  const double t = 2.0;
  const double exact = t + 0.2 * (1.0 - std::cos(4.0 * t));
  double prev = 1e300;
  for (std::size_t k : {3, 5, 7, 10}) {
    const double err = std::abs(cumulative_hazard(gauss_legendre(k), hazard, t) - exact);
    EXPECT_LE(err, prev) << "K=" << k;
    prev = err;
  }
}

TEST(CumulativeHazard, ScaleCovariance) {
  auto base = [](double s) { return 0.3 + std::sin(s) * std::sin(s); };
  for (double c : {0.1, 2.5, 1e3}) {
    const auto& r = gauss_legendre(7);
    const double a = cumulative_hazard(r, base, 1.7);
    const double b = cumulative_hazard(r, [&](double s) { return c * base(s); }, 1.7);
    EXPECT_NEAR(b, c * a, 1e-12 * std::abs(c * a));
  }
}

TEST(CumulativeHazard, NonFiniteHazardReportsNode) {
  const auto& r = gauss_legendre(4);
  try {
    cumulative_hazard(r, [](double s) { return s > 1.0 ? std::numeric_limits<double>::infinity() : 1.0; }, 2.0);
    FAIL() << "expected NonFiniteHazardError";
  } catch (const NonFiniteHazardError& e) {
    EXPECT_GT(e.node_time(), 1.0);
    EXPECT_EQ(e.kind(), ErrorKind::numeric);
  }
  EXPECT_THROW(cumulative_hazard(r, [](double) { return std::nan(""); }, 1.0), NumericDomainError);
}

TEST(ErrorBound, ClosedFormCoefficients) {
  EXPECT_EQ(error_bound(gauss_legendre(1), 1.0, 0.0), 0.0);
  // (3!)^4 / (7 (6!)^3) = 1296 / 2612736000.
  EXPECT_NEAR(error_bound(gauss_legendre(3), 1.0, std::numbers::e), 1296.0 / 2612736000.0 * std::numbers::e,
              1e-12 * 1e-6);
  // 2^5 (2!)^4 / (5 (4!)^3) = 512 / 69120.
  EXPECT_NEAR(error_bound(gauss_legendre(2), 2.0, 1.0), 512.0 / 69120.0, 1e-15);
}

TEST(ErrorBound, FiniteForLargeOrders) {
  for (std::size_t k = 1; k <= kMaxQuadratureOrder; ++k) {
    const double b = error_bound(gauss_legendre(k), 1.0, 1.0);
    EXPECT_TRUE(std::isfinite(b));
    EXPECT_GE(b, 0.0);
  }
  EXPECT_EQ(error_bound(gauss_legendre(3), 0.0, 5.0), 0.0);
}
