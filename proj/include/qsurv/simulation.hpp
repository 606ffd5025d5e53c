// SPDX-License-Identifier: Apache-2.0
#pragma once

/// Synthetic survival data with known hazards.
///
/// Six parametric families take a scalar covariate x ~ Uniform(-1, 1); each
/// parameter is exp(P(x; w)) with P a cubic, except the log-normal location,
/// which is P(x; w) itself. Censoring is Uniform(0, b) with b calibrated to a
/// target censoring rate. Two further scenarios use a binary covariate:
///
///   scenario1 : lambda(t|x) = (1 + x) t^x,             C ~ Uniform(0, 2)
///   scenario2 : lambda(t|x) = 1 + 0.8 (1 - 2x) sin 4t,  C ~ Exponential(1/3)

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "qsurv/data.hpp"
#include "qsurv/errors.hpp"
#include "qsurv/model.hpp"
#include "qsurv/quadrature.hpp"
#include "qsurv/random.hpp"
#include "qsurv/special.hpp"

namespace qsurv {

enum class Family { exponential, weibull, gamma, gompertz, lognormal, loglogistic, scenario1, scenario2 };

inline std::string to_string(Family f) {
  switch (f) {
    case Family::exponential: return "exponential";
    case Family::weibull: return "weibull";
    case Family::gamma: return "gamma";
    case Family::gompertz: return "gompertz";
    case Family::lognormal: return "lognormal";
    case Family::loglogistic: return "loglogistic";
    case Family::scenario1: return "scenario1";
    case Family::scenario2: return "scenario2";
  }
  return "?";
}

inline Family family_from_string(const std::string& s) {
  for (Family f : {Family::exponential, Family::weibull, Family::gamma, Family::gompertz, Family::lognormal,
                   Family::loglogistic, Family::scenario1, Family::scenario2}) {
    if (to_string(f) == s) return f;
  }
  throw ConfigError("unknown family '" + s +
                    "' (expected exponential, weibull, gamma, gompertz, lognormal, loglogistic, scenario1 or "
                    "scenario2)");
}

using Coefficients = std::array<double, 4>;

inline double poly(const Coefficients& w, double x) { return w[0] + x * (w[1] + x * (w[2] + x * w[3])); }

struct GeneratorSpec {
  Family family = Family::exponential;
  // Parameter coefficients; meaning per family:
  //   exponential: a = rate            weibull:     a = shape k, b = scale
  //   gamma:       a = shape k, b = rate           gompertz:    a = b(x), c fixed
  //   lognormal:   a = mu (direct), b = sigma      loglogistic: a = scale alpha, b = shape beta
  Coefficients a{};
  Coefficients b{};
  double gompertz_c = 0.05;
  double target_censoring = 0.20;
  std::size_t n_train = 2000;
  std::size_t n_test = 2000;

  bool binary_covariate() const { return family == Family::scenario1 || family == Family::scenario2; }
};

/// Default generator coefficients for each family.
inline GeneratorSpec make_spec(Family family) {
  GeneratorSpec s;
  s.family = family;
  switch (family) {
    case Family::exponential: s.a = {-1.0, 0.5, -0.3, 0.15}; break;
    case Family::weibull:
      s.a = {0.3, 0.2, -0.1, 0.05};
      s.b = {2.0, 0.3, -0.2, 0.1};
      break;
    case Family::gamma:
      s.a = {1.8, 0.3, -0.1, 0.05};
      s.b = {0.3, -0.4, 0.15, -0.05};
      break;
    case Family::gompertz: s.a = {-2.0, 0.4, -0.2, 0.1}; break;
    case Family::lognormal:
      s.a = {1.5, 0.8, -0.4, 0.2};
      s.b = {-0.1, 0.25, -0.10, 0.03};
      break;
    case Family::loglogistic:
      s.a = {1.2, 0.4, -0.15, 0.08};
      s.b = {1.0, 0.3, -0.1, 0.05};
      break;
    case Family::scenario1:
    case Family::scenario2: s.target_censoring = 0.0; break;
  }
  return s;
}

/// Closed-form hazard, cumulative hazard and survival for a spec.
class GroundTruth {
 public:
  explicit GroundTruth(GeneratorSpec spec) : spec_(std::move(spec)) {}

  const GeneratorSpec& spec() const { return spec_; }

  double hazard(double t, double x) const {
    switch (spec_.family) {
      case Family::exponential: return std::exp(poly(spec_.a, x));
      case Family::weibull: {
        const double k = std::exp(poly(spec_.a, x)), lam = std::exp(poly(spec_.b, x));
        return k / lam * std::pow(t / lam, k - 1.0);
      }
      case Family::gamma: {
        const double k = std::exp(poly(spec_.a, x)), beta = std::exp(poly(spec_.b, x));
        if (t <= 0.0) return k < 1.0 ? std::numeric_limits<double>::infinity() : (k == 1.0 ? beta : 0.0);
        const double log_f = k * std::log(beta) + (k - 1.0) * std::log(t) - beta * t - std::lgamma(k);
        return std::exp(log_f) / special::gamma_q(k, beta * t);
      }
      case Family::gompertz: return std::exp(poly(spec_.a, x)) * std::exp(spec_.gompertz_c * t);
      case Family::lognormal: {
        const double mu = poly(spec_.a, x), sigma = std::exp(poly(spec_.b, x));
        if (t <= 0.0) return 0.0;
        const double z = (std::log(t) - mu) / sigma;
        return special::normal_pdf(z) / (sigma * t * special::normal_sf(z));
      }
      case Family::loglogistic: {
        const double alpha = std::exp(poly(spec_.a, x)), beta = std::exp(poly(spec_.b, x));
        const double r = std::pow(t / alpha, beta);
        return (beta / alpha) * std::pow(t / alpha, beta - 1.0) / (1.0 + r);
      }
      case Family::scenario1: return (1.0 + x) * std::pow(t, x);
      case Family::scenario2: return 1.0 + 0.8 * (1.0 - 2.0 * x) * std::sin(4.0 * t);
    }
    return 0.0;
  }

  double cumulative_hazard(double t, double x) const {
    if (t <= 0.0) return 0.0;
    switch (spec_.family) {
      case Family::exponential: return std::exp(poly(spec_.a, x)) * t;
      case Family::weibull: {
        const double k = std::exp(poly(spec_.a, x)), lam = std::exp(poly(spec_.b, x));
        return std::pow(t / lam, k);
      }
      case Family::gamma: {
        const double k = std::exp(poly(spec_.a, x)), beta = std::exp(poly(spec_.b, x));
        return -std::log(special::gamma_q(k, beta * t));
      }
      case Family::gompertz: {
        const double c = spec_.gompertz_c;
        return std::exp(poly(spec_.a, x)) / c * std::expm1(c * t);
      }
      case Family::lognormal: {
        const double mu = poly(spec_.a, x), sigma = std::exp(poly(spec_.b, x));
        return -std::log(special::normal_sf((std::log(t) - mu) / sigma));
      }
      case Family::loglogistic: {
        const double alpha = std::exp(poly(spec_.a, x)), beta = std::exp(poly(spec_.b, x));
        return std::log1p(std::pow(t / alpha, beta));
      }
      case Family::scenario1: return std::pow(t, 1.0 + x);
      case Family::scenario2: return t + 0.2 * (1.0 - 2.0 * x) * (1.0 - std::cos(4.0 * t));
    }
    return 0.0;
  }

  double survival(double t, double x) const { return std::exp(-cumulative_hazard(t, x)); }

 private:
  GeneratorSpec spec_;
};

inline GroundTruth scenario_truth(const GeneratorSpec& spec) { return GroundTruth(spec); }

namespace detail {

// Marsaglia-Tsang for shape >= 1; smaller shapes use the U^(1/k) boost.
inline double sample_gamma(double shape, double rate, Rng& rng) {
  if (shape < 1.0) return sample_gamma(shape + 1.0, rate, rng) * std::pow(rng.uniform_open(), 1.0 / shape);
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double z, v;
    do {
      z = rng.normal();
      v = 1.0 + c * z;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform_open();
    if (u < 1.0 - 0.0331 * z * z * z * z) return d * v / rate;
    if (std::log(u) < 0.5 * z * z + d * (1.0 - v + std::log(v))) return d * v / rate;
  }
}

// Solve Lambda(t) = target for an increasing cumulative hazard by bisection.
inline double invert_cumulative_hazard(const GroundTruth& truth, double x, double target) {
  double lo = 0.0, hi = 1.0;
  while (truth.cumulative_hazard(hi, x) < target) hi *= 2.0;
  while (hi - lo > 1e-10 * std::max(1.0, hi)) {
    const double mid = 0.5 * (lo + hi);
    (truth.cumulative_hazard(mid, x) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

inline double sample_covariate(const GeneratorSpec& spec, Rng& rng) {
  return spec.binary_covariate() ? (rng.bernoulli(0.5) ? 1.0 : 0.0) : rng.uniform(-1.0, 1.0);
}

/// One draw of T | x.
inline double sample_event_time(const GeneratorSpec& spec, double x, Rng& rng) {
  if (spec.binary_covariate() ? (x != 0.0 && x != 1.0) : !(x >= -1.0 && x <= 1.0)) {
    throw ContractError("covariate " + format_double(x) + " is outside the generator's domain");
  }
  switch (spec.family) {
    case Family::exponential: return rng.exponential(std::exp(poly(spec.a, x)));
    case Family::weibull: {
      const double k = std::exp(poly(spec.a, x)), lam = std::exp(poly(spec.b, x));
      return lam * std::pow(rng.exponential(1.0), 1.0 / k);
    }
    case Family::gamma: return detail::sample_gamma(std::exp(poly(spec.a, x)), std::exp(poly(spec.b, x)), rng);
    case Family::gompertz: {
      const double b = std::exp(poly(spec.a, x)), c = spec.gompertz_c;
      return std::log1p(c * rng.exponential(1.0) / b) / c;
    }
    case Family::lognormal: return std::exp(poly(spec.a, x) + std::exp(poly(spec.b, x)) * rng.normal());
    case Family::loglogistic: {
      const double alpha = std::exp(poly(spec.a, x)), beta = std::exp(poly(spec.b, x));
      const double u = rng.uniform_open();
      return alpha * std::pow((1.0 - u) / u, 1.0 / beta);
    }
    case Family::scenario1: return std::pow(rng.exponential(1.0), 1.0 / (1.0 + x));
    case Family::scenario2:
      return detail::invert_cumulative_hazard(GroundTruth(spec), x, rng.exponential(1.0));
  }
  return 0.0;
}

inline constexpr std::size_t kCalibrationDraws = 100000;

/// Upper bound b of Uniform(0, b) censoring giving P(C < T) close to the
/// target. Bisection over b with common random numbers. Target 0 returns +inf.
inline double calibrate_censoring(const GeneratorSpec& spec, double target_rate, Rng& rng,
                                  std::size_t draws = kCalibrationDraws) {
  if (target_rate == 0.0) return std::numeric_limits<double>::infinity();
  if (!(target_rate > 0.0 && target_rate < 1.0)) {
    throw CalibrationError("target censoring rate " + format_double(target_rate) + " is not in (0, 1)");
  }
  std::vector<double> t(draws), u(draws);
  for (std::size_t i = 0; i < draws; ++i) {
    t[i] = sample_event_time(spec, sample_covariate(spec, rng), rng);
    u[i] = rng.uniform();
  }
  auto rate = [&](double b) {
    std::size_t censored = 0;
    for (std::size_t i = 0; i < draws; ++i) censored += b * u[i] < t[i] ? 1 : 0;
    return static_cast<double>(censored) / static_cast<double>(draws);
  };
  double lo = 0.0, hi = 1.0;
  for (int i = 0; rate(hi) > target_rate; ++i) {
    if (i > 200) throw CalibrationError("censoring rate " + format_double(target_rate) + " is unreachable");
    lo = hi;
    hi *= 2.0;
  }
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double r = rate(mid);
    if (std::abs(r - target_rate) < 1e-3) return mid;
    (r > target_rate ? lo : hi) = mid;
  }
  const double b = 0.5 * (lo + hi);
  if (std::abs(rate(b) - target_rate) > 0.01) {
    throw CalibrationError("censoring calibration did not reach " + format_double(target_rate));
  }
  return b;
}

struct SimulatedData {
  Dataset train;
  Dataset test;
  double censoring_bound = std::numeric_limits<double>::infinity();
};

namespace detail {

inline Dataset draw_dataset(const GeneratorSpec& spec, std::size_t n, double bound, Rng& rng) {
  Dataset data({"x"});
  for (std::size_t i = 0; i < n; ++i) {
    const double x = sample_covariate(spec, rng);
    const double t = sample_event_time(spec, x, rng);
    double c = std::numeric_limits<double>::infinity();
    if (spec.family == Family::scenario1) {
      c = rng.uniform(0.0, 2.0);
    } else if (spec.family == Family::scenario2) {
      c = rng.exponential(1.0 / 3.0);
    } else if (std::isfinite(bound)) {
      c = rng.uniform(0.0, bound);
    }
    const double xs[1] = {x};
    data.add(xs, std::min(t, c), t <= c ? 1 : 0);
  }
  return data;
}

}  // namespace detail

/// Train and test sets from independent RNG streams derived from `seed`.
inline SimulatedData simulate(const GeneratorSpec& spec, std::uint64_t seed) {
  SimulatedData out;
  if (!spec.binary_covariate()) {
    Rng calib(derive_seed(seed, 1));
    out.censoring_bound = calibrate_censoring(spec, spec.target_censoring, calib);
  }
  Rng train_rng(derive_seed(seed, 2));
  Rng test_rng(derive_seed(seed, 3));
  out.train = detail::draw_dataset(spec, spec.n_train, out.censoring_bound, train_rng);
  out.test = detail::draw_dataset(spec, spec.n_test, out.censoring_bound, test_rng);
  return out;
}

/// 200 equally spaced points on (0, p99] where p99 is the 99th percentile of
/// training times. t = 0 is left out: some true hazards are unbounded there.
inline std::vector<double> evaluation_grid(const Dataset& train, std::size_t points = 200) {
  const double hi = quantile(train.times(), 0.99);
  if (!(hi > 0.0)) throw DegenerateDataError("training times have a zero 99th percentile");
  return linspace(hi / static_cast<double>(points), hi, points);
}

struct MarginalCurves {
  std::vector<double> grid;
  std::vector<double> survival;
  std::vector<double> cumhaz;
  std::vector<double> hazard;
};

inline MarginalCurves marginalized_curves(const GroundTruth& truth, std::span<const double> covariates,
                                          std::span<const double> grid) {
  if (covariates.empty()) throw ContractError("marginalized curves need at least one subject");
  const auto n = static_cast<double>(covariates.size());
  MarginalCurves m{{grid.begin(), grid.end()}, {}, {}, {}};
  for (double t : grid) {
    double s = 0.0, c = 0.0, h = 0.0;
    for (double x : covariates) {
      s += truth.survival(t, x);
      c += truth.cumulative_hazard(t, x);
      h += truth.hazard(t, x);
    }
    m.survival.push_back(s / n);
    m.cumhaz.push_back(c / n);
    m.hazard.push_back(h / n);
  }
  return m;
}

inline MarginalCurves marginalized_curves(const HazardModel& model, const QuadratureRule& rule,
                                          std::span<const double> covariates, std::size_t rows,
                                          std::span<const double> grid) {
  if (rows == 0) throw ContractError("marginalized curves need at least one subject");
  const CurveTable table = predict_curves(model, rule, covariates, rows, grid);
  const std::size_t G = grid.size();
  MarginalCurves m{{grid.begin(), grid.end()}, std::vector<double>(G), std::vector<double>(G),
                   std::vector<double>(G)};
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t g = 0; g < G; ++g) {
      m.survival[g] += table.survival[i * G + g];
      m.cumhaz[g] += table.cumhaz[i * G + g];
      m.hazard[g] += table.hazard[i * G + g];
    }
  for (std::size_t g = 0; g < G; ++g) {
    m.survival[g] /= static_cast<double>(rows);
    m.cumhaz[g] /= static_cast<double>(rows);
    m.hazard[g] /= static_cast<double>(rows);
  }
  return m;
}

struct L1Error {
  double survival = 0.0;
  double cumhaz = 0.0;
  double hazard = 0.0;
};

namespace detail {

inline double trapezoid_mean_abs(std::span<const double> grid, std::span<const double> diff) {
  double area = 0.0;
  for (std::size_t g = 1; g < grid.size(); ++g) {
    area += 0.5 * (std::abs(diff[g - 1]) + std::abs(diff[g])) * (grid[g] - grid[g - 1]);
  }
  return area / (grid.back() - grid.front());
}

}  // namespace detail

/// Mean over test subjects of the grid-normalised trapezoid integral of
/// |predicted - true| for S, Lambda and lambda. Covariates are one column.
/// With `hazard_only` the quadrature-based curves are skipped (left at 0).
inline L1Error l1_error(const HazardModel& model, const QuadratureRule& rule, const GroundTruth& truth,
                        const Dataset& test, std::span<const double> grid, bool hazard_only = false) {
  if (test.empty()) throw ContractError("l1_error needs a nonempty test set");
  if (grid.size() < 2) throw ContractError("l1_error needs at least two grid points");
  if (test.dim() != 1) throw ShapeError("ground truth takes one covariate, test set has " + std::to_string(test.dim()));
  require_ascending_grid(grid);
  const std::size_t G = grid.size(), n = test.size();
  L1Error err;
  std::vector<double> ds(G), dc(G), dh(G);
  constexpr std::size_t chunk = 8;
  for (std::size_t start = 0; start < n; start += chunk) {
    const std::size_t rows = std::min(chunk, n - start);
    const auto x = test.covariates().subspan(start, rows);
    std::vector<double> hz(rows * G), cum, surv;
    if (hazard_only) {
      std::vector<double> times(rows * G);
      for (std::size_t i = 0; i < rows; ++i) std::copy(grid.begin(), grid.end(), times.begin() + i * G);
      ad::Graph g = ad::Graph::inference();
      const ad::Tensor out = model.forward(g, x, rows, times, G);
      const auto logs = out.values();
      for (std::size_t j = 0; j < hz.size(); ++j) hz[j] = std::exp(logs[j]);
    } else {
      CurveTable table = predict_curves(model, rule, x, rows, grid);
      hz = std::move(table.hazard);
      cum = std::move(table.cumhaz);
      surv = std::move(table.survival);
    }
    for (std::size_t i = 0; i < rows; ++i) {
      const double xi = x[i];
      for (std::size_t g = 0; g < G; ++g) {
        dh[g] = hz[i * G + g] - truth.hazard(grid[g], xi);
        if (!hazard_only) {
          dc[g] = cum[i * G + g] - truth.cumulative_hazard(grid[g], xi);
          ds[g] = surv[i * G + g] - truth.survival(grid[g], xi);
        }
      }
      err.hazard += detail::trapezoid_mean_abs(grid, dh);
      if (!hazard_only) {
        err.cumhaz += detail::trapezoid_mean_abs(grid, dc);
        err.survival += detail::trapezoid_mean_abs(grid, ds);
      }
    }
  }
  err.hazard /= static_cast<double>(n);
  err.cumhaz /= static_cast<double>(n);
  err.survival /= static_cast<double>(n);
  return err;
}

/// Truth curves in long format: t, lambda, cumhaz, survival, group.
/// Binary scenarios emit groups x=0 and x=1; the parametric families emit
/// x = -1, -0.5, 0, 0.5, 1 plus the marginal over `covariates`.
inline void write_truth_csv(std::ostream& out, const GroundTruth& truth, std::span<const double> grid,
                            std::span<const double> covariates) {
  out << "t,lambda,cumhaz,survival,group\n";
  const std::vector<double> levels = truth.spec().binary_covariate() ? std::vector<double>{0.0, 1.0}
                                                                     : std::vector<double>{-1.0, -0.5, 0.0, 0.5, 1.0};
  for (double x : levels) {
    for (double t : grid) {
      out << format_double(t) << ',' << format_double(truth.hazard(t, x)) << ','
          << format_double(truth.cumulative_hazard(t, x)) << ',' << format_double(truth.survival(t, x)) << ",x="
          << format_double(x) << '\n';
    }
  }
  if (!covariates.empty()) {
    const MarginalCurves m = marginalized_curves(truth, covariates, grid);
    for (std::size_t g = 0; g < grid.size(); ++g) {
      out << format_double(grid[g]) << ',' << format_double(m.hazard[g]) << ',' << format_double(m.cumhaz[g]) << ','
          << format_double(m.survival[g]) << ",marginal\n";
    }
  }
}

}  // namespace qsurv
