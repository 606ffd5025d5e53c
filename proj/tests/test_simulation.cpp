// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "qsurv/simulation.hpp"

using namespace qsurv;

namespace {

const Family kParametric[] = {Family::exponential, Family::weibull,   Family::gamma,
                              Family::gompertz,    Family::lognormal, Family::loglogistic};
const Family kAll[] = {Family::exponential, Family::weibull,     Family::gamma,     Family::gompertz,
                       Family::lognormal,   Family::loglogistic, Family::scenario1, Family::scenario2};

std::vector<double> draws(const GeneratorSpec& spec, double x, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> out(n);
  for (double& t : out) t = sample_event_time(spec, x, rng);
  return out;
}

/// Largest |empirical S - true S| over the central 95% of the sample.
double central_sup_distance(std::vector<double> sample, const GroundTruth& truth, double x) {
  std::sort(sample.begin(), sample.end());
  const auto n = static_cast<double>(sample.size());
  const auto lo = static_cast<std::size_t>(0.025 * n), hi = static_cast<std::size_t>(0.975 * n);
  double worst = 0.0;
  for (std::size_t i = lo; i < hi; ++i) {
    const double s_true = truth.survival(sample[i], x);
    // Empirical survival just after and just before the i-th order statistic.
    worst = std::max({worst, std::abs((n - static_cast<double>(i) - 1.0) / n - s_true),
                      std::abs((n - static_cast<double>(i)) / n - s_true)});
  }
  return worst;
}

/// Model with constant log-hazard ln(c).
HazardModel constant_model(double c) {
  Architecture a;
  a.input_dim = 1;
  a.hidden = {4};
  a.conditioning = Conditioning::concat;
  HazardModel m(a, 0);
  auto w = m.parameter("output.weight").values();
  std::fill(w.begin(), w.end(), 0.0);
  m.parameter("output.bias")[0] = std::log(c);
  return m;
}

GeneratorSpec constant_rate_spec(double rate) {
  GeneratorSpec s = make_spec(Family::exponential);
  s.a = {std::log(rate), 0.0, 0.0, 0.0};
  return s;
}

}  // namespace

TEST(Families, NamesRoundTrip) {
  for (Family f : kAll) EXPECT_EQ(family_from_string(to_string(f)), f);
  EXPECT_THROW(family_from_string("weibul"), ConfigError);
}

TEST(Families, PolynomialLink) {
  const Coefficients w = {1.0, 2.0, 3.0, 4.0};
  EXPECT_EQ(poly(w, 0.0), 1.0);
  EXPECT_EQ(poly(w, 1.0), 10.0);
  EXPECT_EQ(poly(w, -1.0), -2.0);
  EXPECT_EQ(poly(w, 0.5), 1.0 + 1.0 + 0.75 + 0.5);
}

TEST(Sampler, ExponentialMean) {
  const auto t = draws(make_spec(Family::exponential), 0.0, 100000, 1);
  double mean = 0.0;
  for (double v : t) mean += v / 1e5;
  EXPECT_NEAR(mean, std::numbers::e, 0.02 * std::numbers::e);
}

TEST(Sampler, LogNormalLogMean) {
  const auto t = draws(make_spec(Family::lognormal), 0.0, 100000, 2);
  double mean = 0.0;
  for (double v : t) mean += std::log(v) / 1e5;
  EXPECT_NEAR(mean, 1.5, 3.0 * std::exp(-0.1) / std::sqrt(1e5));
}

TEST(Sampler, ScenarioOneBaselineIsUnitExponential) {
  const GeneratorSpec spec = make_spec(Family::scenario1);
  const auto t = draws(spec, 0.0, 100000, 3);
  EXPECT_LT(central_sup_distance(t, GroundTruth(spec), 0.0), 0.01);
  for (double v : {0.3, 1.0, 2.0}) EXPECT_NEAR(GroundTruth(spec).survival(v, 0.0), std::exp(-v), 1e-15);
}

TEST(Sampler, EmpiricalSurvivalMatchesTruthForEveryFamily) {
  for (Family f : kAll) {
    const GeneratorSpec spec = make_spec(f);
    const GroundTruth truth(spec);
    for (double x : spec.binary_covariate() ? std::vector<double>{0.0, 1.0} : std::vector<double>{-0.8, 0.0, 0.6}) {
      const auto t = draws(spec, x, 100000, 10 + static_cast<std::uint64_t>(f));
      EXPECT_LT(central_sup_distance(t, truth, x), 0.01) << to_string(f) << " x=" << x;
    }
  }
}

TEST(Sampler, RejectsOutOfDomainCovariates) {
  Rng rng(0);
  EXPECT_THROW(sample_event_time(make_spec(Family::weibull), 1.5, rng), ContractError);
  EXPECT_THROW(sample_event_time(make_spec(Family::scenario1), 0.5, rng), ContractError);
  EXPECT_NO_THROW(sample_event_time(make_spec(Family::weibull), -1.0, rng));
}

TEST(Sampler, GammaShapeBelowOne) {
  Rng rng(4);
  double mean = 0.0;
  for (int i = 0; i < 100000; ++i) mean += detail::sample_gamma(0.4, 2.0, rng) / 1e5;
  EXPECT_NEAR(mean, 0.2, 0.005);
}

TEST(Truth, SelfConsistency) {
  for (Family f : kAll) {
    const GeneratorSpec spec = make_spec(f);
    const GroundTruth truth(spec);
    for (double x : spec.binary_covariate() ? std::vector<double>{0.0, 1.0} : std::vector<double>{-1.0, -0.5, 0.0, 0.5, 1.0}) {
      for (double t : linspace(0.05, 5.0, 60)) {
        const double h = 1e-5;
        const double numeric = -(std::log(truth.survival(t + h, x)) - std::log(truth.survival(t - h, x))) / (2 * h);
        EXPECT_NEAR(numeric, truth.hazard(t, x), 1e-4 * std::max(1.0, truth.hazard(t, x)))
            << to_string(f) << " x=" << x << " t=" << t;
        EXPECT_NEAR(truth.survival(t, x), std::exp(-truth.cumulative_hazard(t, x)), 1e-15);
      }
      EXPECT_EQ(truth.cumulative_hazard(0.0, x), 0.0);
    }
  }
}

TEST(Truth, ScenarioFacts) {
  const GroundTruth s1(make_spec(Family::scenario1));
  EXPECT_DOUBLE_EQ(s1.hazard(0.5, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(s1.hazard(0.5, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(s1.survival(1.0, 0.0), std::exp(-1.0));
  EXPECT_DOUBLE_EQ(s1.survival(1.0, 1.0), std::exp(-1.0));
  EXPECT_LT(s1.hazard(0.3, 1.0), s1.hazard(0.3, 0.0));
  EXPECT_GT(s1.hazard(0.7, 1.0), s1.hazard(0.7, 0.0));
  const GroundTruth s2(make_spec(Family::scenario2));
  EXPECT_EQ(s2.hazard(0.0, 0.0), 1.0);
  EXPECT_EQ(s2.hazard(0.0, 1.0), 1.0);
  EXPECT_NEAR(s2.hazard(0.3, 0.0) - 1.0, -(s2.hazard(0.3, 1.0) - 1.0), 1e-15);
}

TEST(Truth, GeneratorCoefficients) {
  const GroundTruth w(make_spec(Family::weibull));
  // x = 0: k = e^0.3, lambda = e^2.
  const double k = std::exp(0.3), lam = std::exp(2.0);
  EXPECT_NEAR(w.cumulative_hazard(3.0, 0.0), std::pow(3.0 / lam, k), 1e-15);
  const GroundTruth g(make_spec(Family::gompertz));
  EXPECT_NEAR(g.hazard(2.0, 0.0), std::exp(-2.0) * std::exp(0.1), 1e-15);
  const GroundTruth ll(make_spec(Family::loglogistic));
  EXPECT_NEAR(ll.survival(std::exp(1.2), 0.0), 0.5, 1e-15);  // median is alpha
  const GroundTruth ln(make_spec(Family::lognormal));
  EXPECT_NEAR(ln.survival(std::exp(1.5), 0.0), 0.5, 1e-15);
}

TEST(Calibration, TargetZeroMeansNoCensoring) {
  Rng rng(0);
  EXPECT_TRUE(std::isinf(calibrate_censoring(make_spec(Family::weibull), 0.0, rng)));
  EXPECT_THROW(calibrate_censoring(make_spec(Family::weibull), 1.0, rng), CalibrationError);
  EXPECT_THROW(calibrate_censoring(make_spec(Family::weibull), -0.1, rng), CalibrationError);
}

TEST(Calibration, UnitExponentialHalf) {
  // P(C < T) = (1 - e^{-b}) / b = 0.5 at b = 1.59362426004004...
  Rng rng(7);
  const double b = calibrate_censoring(constant_rate_spec(1.0), 0.5, rng);
  EXPECT_NEAR(b, 1.5936242600400401, 0.05);
}

TEST(Calibration, WeibullRealisedRate) {
  for (std::uint64_t seed : {1, 2, 3}) {
    const SimulatedData d = simulate(make_spec(Family::weibull), seed);
    EXPECT_GE(d.train.censoring_rate(), 0.17) << seed;
    EXPECT_LE(d.train.censoring_rate(), 0.23) << seed;
    EXPECT_GE(d.test.censoring_rate(), 0.17) << seed;
    EXPECT_LE(d.test.censoring_rate(), 0.23) << seed;
    EXPECT_TRUE(std::isfinite(d.censoring_bound));
  }
}

TEST(Simulate, ShapesAndDeterminism) {
  const GeneratorSpec spec = make_spec(Family::gamma);
  const SimulatedData a = simulate(spec, 5), b = simulate(spec, 5), c = simulate(spec, 6);
  ASSERT_EQ(a.train.size(), 2000u);
  ASSERT_EQ(a.test.size(), 2000u);
  EXPECT_EQ(a.train.covariate_names(), std::vector<std::string>{"x"});
  EXPECT_EQ(a.train.times(), b.train.times());
  EXPECT_EQ(a.test.events(), b.test.events());
  EXPECT_NE(a.train.times(), c.train.times());
  EXPECT_NE(a.train.times(), a.test.times());
  for (std::size_t i = 0; i < a.train.size(); ++i) {
    EXPECT_GE(a.train.x(i)[0], -1.0);
    EXPECT_LE(a.train.x(i)[0], 1.0);
  }
}

TEST(Simulate, ScenariosUseBinaryCovariate) {
  for (Family f : {Family::scenario1, Family::scenario2}) {
    const SimulatedData d = simulate(make_spec(f), 1);
    std::size_t ones = 0;
    for (std::size_t i = 0; i < d.train.size(); ++i) {
      const double x = d.train.x(i)[0];
      EXPECT_TRUE(x == 0.0 || x == 1.0);
      ones += x == 1.0 ? 1 : 0;
    }
    EXPECT_NEAR(static_cast<double>(ones) / 2000.0, 0.5, 0.05);
    EXPECT_GT(d.train.censoring_rate(), 0.05) << to_string(f);
    EXPECT_LT(d.train.censoring_rate(), 0.6) << to_string(f);
  }
}

TEST(Grid, EvaluationGridExcludesZero) {
  const SimulatedData d = simulate(make_spec(Family::weibull), 9);
  const auto grid = evaluation_grid(d.train);
  ASSERT_EQ(grid.size(), 200u);
  const double p99 = quantile(d.train.times(), 0.99);
  EXPECT_DOUBLE_EQ(grid.back(), p99);
  EXPECT_DOUBLE_EQ(grid.front(), p99 / 200.0);
  EXPECT_GT(grid.front(), 0.0);
}

TEST(Marginal, Examples) {
  GeneratorSpec spec = make_spec(Family::exponential);
  spec.a = {0.0, std::log(2.0), 0.0, 0.0};  // rate 1 at x = 0, rate 2 at x = 1
  const GroundTruth truth(spec);
  const std::vector<double> grid = {0.5, 1.0};
  const std::vector<double> two = {0.0, 1.0};
  const MarginalCurves m = marginalized_curves(truth, two, grid);
  EXPECT_DOUBLE_EQ(m.survival[1], (std::exp(-1.0) + std::exp(-2.0)) / 2.0);
  EXPECT_DOUBLE_EQ(m.hazard[0], 1.5);
  EXPECT_DOUBLE_EQ(m.cumhaz[1], 1.5);
  const std::vector<double> one = {1.0};
  const MarginalCurves single = marginalized_curves(truth, one, grid);
  EXPECT_DOUBLE_EQ(single.survival[0], truth.survival(0.5, 1.0));
  EXPECT_THROW(marginalized_curves(truth, std::vector<double>{}, grid), ContractError);
}

TEST(Marginal, ModelMatchesTruthWhenExact) {
  const GroundTruth truth(constant_rate_spec(0.4));
  const HazardModel m = constant_model(0.4);
  const std::vector<double> xs = {-0.5, 0.2, 0.9};
  const auto grid = linspace(0.1, 3.0, 30);
  const MarginalCurves a = marginalized_curves(truth, xs, grid);
  const MarginalCurves b = marginalized_curves(m, gauss_legendre(5), xs, 3, grid);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    EXPECT_NEAR(a.survival[g], b.survival[g], 1e-14);
    EXPECT_NEAR(a.hazard[g], b.hazard[g], 1e-14);
  }
}

TEST(L1, ZeroForExactModelAndOffsetForShiftedHazard) {
  const GroundTruth truth(constant_rate_spec(0.4));
  Dataset test({"x"});
  for (double x : {-0.7, 0.0, 0.3, 0.8}) {
    const double xs[1] = {x};
    test.add(xs, 1.0, 1);
  }
  const auto grid = linspace(0.05, 4.0, 50);
  const L1Error exact = l1_error(constant_model(0.4), gauss_legendre(3), truth, test, grid);
  EXPECT_NEAR(exact.hazard, 0.0, 1e-14);
  EXPECT_NEAR(exact.cumhaz, 0.0, 1e-13);
  EXPECT_NEAR(exact.survival, 0.0, 1e-14);
  const L1Error shifted = l1_error(constant_model(0.5), gauss_legendre(3), truth, test, grid);
  EXPECT_NEAR(shifted.hazard, 0.1, 1e-12);
  // |0.1 t| averaged over [0.05, 4].
  EXPECT_NEAR(shifted.cumhaz, 0.1 * (0.05 + 4.0) / 2.0, 1e-12);
  const L1Error fast = l1_error(constant_model(0.5), gauss_legendre(3), truth, test, grid, true);
  EXPECT_EQ(fast.hazard, shifted.hazard);
  EXPECT_EQ(fast.survival, 0.0);
  EXPECT_THROW(l1_error(constant_model(0.5), gauss_legendre(3), truth, test, std::vector<double>{1.0}), ContractError);
}

TEST(TruthCsv, LongFormat) {
  const GroundTruth truth(make_spec(Family::scenario1));
  std::ostringstream out;
  const std::vector<double> grid = {0.5, 1.0};
  const std::vector<double> xs = {0.0, 1.0, 1.0};
  write_truth_csv(out, truth, grid, xs);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "t,lambda,cumhaz,survival,group");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 2u * 2u + 2u);
  EXPECT_NE(out.str().find("0.5,1,0.5,"), std::string::npos);  // x=0 at t=0.5
  EXPECT_NE(out.str().find(",marginal"), std::string::npos);
}
