// SPDX-License-Identifier: Apache-2.0
#pragma once

/// Censoring-aware evaluation metrics.
///
/// The censoring survival function G(t) = P(C > t) is estimated by
/// Kaplan-Meier on the training split with the event indicator flipped.
/// Every inverse-probability weight is capped at kIpcwCap.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qsurv/data.hpp"
#include "qsurv/errors.hpp"
#include "qsurv/special.hpp"

namespace qsurv {

inline constexpr double kIpcwCap = 10.0;
inline constexpr double kHorizonSupport = 0.001;
inline constexpr double kLogClamp = 1e-7;

/// Right-continuous step function starting at 1 before the first jump.
class StepFunction {
 public:
  StepFunction() = default;
  StepFunction(std::vector<double> jump_times, std::vector<double> values)
      : times_(std::move(jump_times)), values_(std::move(values)) {
    if (times_.size() != values_.size()) throw ContractError("step function needs one value per jump");
  }

  const std::vector<double>& jump_times() const { return times_; }
  const std::vector<double>& values() const { return values_; }

  /// Value at t (right-continuous).
  double operator()(double t) const {
    const auto it = std::upper_bound(times_.begin(), times_.end(), t);
    return it == times_.begin() ? 1.0 : values_[static_cast<std::size_t>(it - times_.begin()) - 1];
  }

  /// Left limit at t.
  double left_limit(double t) const {
    const auto it = std::lower_bound(times_.begin(), times_.end(), t);
    return it == times_.begin() ? 1.0 : values_[static_cast<std::size_t>(it - times_.begin()) - 1];
  }

 private:
  std::vector<double> times_;
  std::vector<double> values_;
};

/// Product-limit estimator. Jumps only at times with at least one event.
inline StepFunction kaplan_meier(std::span<const double> times, std::span<const int> events) {
  if (times.empty()) throw ContractError("kaplan_meier requires at least one observation");
  if (times.size() != events.size()) throw ContractError("kaplan_meier: times and events differ in length");
  std::vector<std::size_t> order(times.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (!(times[i] >= 0.0)) throw ContractError("kaplan_meier requires times >= 0");
    order[i] = i;
  }
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return times[a] < times[b]; });

  std::vector<double> jumps, values;
  double s = 1.0;
  std::size_t at_risk = times.size();
  for (std::size_t i = 0; i < order.size();) {
    const double t = times[order[i]];
    std::size_t deaths = 0, leaving = 0;
    while (i < order.size() && times[order[i]] == t) {
      deaths += events[order[i]] == 1 ? 1 : 0;
      ++leaving;
      ++i;
    }
    if (deaths > 0) {
      s *= 1.0 - static_cast<double>(deaths) / static_cast<double>(at_risk);
      jumps.push_back(t);
      values.push_back(s);
    }
    at_risk -= leaving;
  }
  return {std::move(jumps), std::move(values)};
}

/// Kaplan-Meier of the censoring distribution.
inline StepFunction censoring_survival(const Dataset& data) {
  std::vector<int> flipped(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) flipped[i] = 1 - data.event(i);
  return kaplan_meier(data.times(), flipped);
}

/// Predicted survival curves on a shared ascending grid, one row per subject.
/// Between grid points the curve is linearly interpolated; before the first
/// grid point it is interpolated from S(0) = 1; past the last it is held.
struct SurvivalPredictions {
  std::vector<double> grid;
  std::size_t subjects = 0;
  std::vector<double> values;  // subjects x grid, row-major

  SurvivalPredictions() = default;
  SurvivalPredictions(std::vector<double> g, std::size_t n, std::vector<double> v)
      : grid(std::move(g)), subjects(n), values(std::move(v)) {
    if (values.size() != subjects * grid.size()) throw ShapeError("prediction matrix does not match grid");
    for (std::size_t i = 1; i < grid.size(); ++i)
      if (grid[i] < grid[i - 1]) throw ContractError("prediction grid must be ascending");
  }

  struct Position {
    std::size_t index = 0;  // interpolate between index-1 and index
    double frac = 0.0;
    int mode = 0;  // 0 before grid, 1 inside, 2 after
  };

  Position locate(double t) const {
    if (grid.empty()) throw ContractError("empty prediction grid");
    if (t <= grid.front()) return {0, grid.front() > 0.0 ? t / grid.front() : 1.0, 0};
    if (t >= grid.back()) return {grid.size() - 1, 1.0, 2};
    const auto it = std::upper_bound(grid.begin(), grid.end(), t);
    const std::size_t hi = static_cast<std::size_t>(it - grid.begin());
    return {hi, (t - grid[hi - 1]) / (grid[hi] - grid[hi - 1]), 1};
  }

  double at(std::size_t i, const Position& p) const {
    const double* row = values.data() + i * grid.size();
    switch (p.mode) {
      case 0: return 1.0 + p.frac * (row[0] - 1.0);
      case 2: return row[grid.size() - 1];
      default: return row[p.index - 1] + p.frac * (row[p.index] - row[p.index - 1]);
    }
  }

  double at(std::size_t i, double t) const { return at(i, locate(t)); }
};

struct CIndexResult {
  std::optional<double> value;  // empty when there are no comparable pairs
  std::size_t comparable_pairs = 0;
  std::size_t tied_pairs = 0;
  std::size_t capped_weights = 0;
};

inline double capped_inverse(double g, std::size_t* capped = nullptr) {
  if (g <= 0.0 || 1.0 / g > kIpcwCap) {
    if (capped) ++*capped;
    return kIpcwCap;
  }
  return 1.0 / g;
}

/// IPCW time-dependent concordance. Comparable pairs: event subject i with
/// o_i < horizon against every j with o_j > o_i. Concordant when
/// S_i(o_i) < S_j(o_i) strictly; weight min(1 / G(o_i-)^2, 10).
inline CIndexResult c_index_td(const SurvivalPredictions& pred, const Dataset& test, const StepFunction& censoring,
                               double horizon) {
  if (pred.subjects != test.size()) throw ShapeError("predictions and test set differ in size");
  CIndexResult result;
  double numerator = 0.0, denominator = 0.0;
  const std::size_t n = test.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double oi = test.time(i);
    if (test.event(i) != 1 || !(oi < horizon)) continue;
    const double gi = censoring.left_limit(oi);
    double w = 0.0;
    if (gi <= 0.0 || 1.0 / (gi * gi) > kIpcwCap) {
      w = kIpcwCap;
      ++result.capped_weights;
    } else {
      w = 1.0 / (gi * gi);
    }
    const auto pos = pred.locate(oi);
    const double si = pred.at(i, pos);
    for (std::size_t j = 0; j < n; ++j) {
      if (!(oi < test.time(j))) continue;
      const double sj = pred.at(j, pos);
      ++result.comparable_pairs;
      denominator += w;
      if (si < sj) {
        numerator += w;
      } else if (si == sj) {
        ++result.tied_pairs;
      }
    }
  }
  if (result.comparable_pairs > 0) result.value = numerator / denominator;
  return result;
}

namespace detail {

inline void require_support(const StepFunction& censoring, double t) {
  if (censoring(t) <= 0.0) {
    throw HorizonError("time " + format_double(t) + " lies beyond the support of the censoring distribution");
  }
}

}  // namespace detail

/// IPCW Brier score at t.
inline double brier(const SurvivalPredictions& pred, const Dataset& test, const StepFunction& censoring, double t,
                    std::size_t* capped = nullptr) {
  if (pred.subjects != test.size()) throw ShapeError("predictions and test set differ in size");
  detail::require_support(censoring, t);
  const auto pos = pred.locate(t);
  const double w_alive = capped_inverse(censoring(t), capped);
  double acc = 0.0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const double s = pred.at(i, pos);
    const double o = test.time(i);
    if (o < t && test.event(i) == 1) {
      acc += s * s * capped_inverse(censoring.left_limit(o), capped);
    } else if (o > t) {
      acc += (1.0 - s) * (1.0 - s) * w_alive;
    }
  }
  return acc / static_cast<double>(test.size());
}

/// IPCW binomial log-likelihood at t; probabilities clamped to [1e-7, 1 - 1e-7].
inline double binomial_log_likelihood(const SurvivalPredictions& pred, const Dataset& test,
                                      const StepFunction& censoring, double t, std::size_t* capped = nullptr) {
  if (pred.subjects != test.size()) throw ShapeError("predictions and test set differ in size");
  detail::require_support(censoring, t);
  const auto pos = pred.locate(t);
  const double w_alive = capped_inverse(censoring(t), capped);
  double acc = 0.0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const double s = std::clamp(pred.at(i, pos), kLogClamp, 1.0 - kLogClamp);
    const double o = test.time(i);
    if (o < t && test.event(i) == 1) {
      acc += std::log(1.0 - s) * capped_inverse(censoring.left_limit(o), capped);
    } else if (o > t) {
      acc += std::log(s) * w_alive;
    }
  }
  return acc / static_cast<double>(test.size());
}

/// `points` equally spaced times from the smallest positive observed time to the horizon.
inline std::vector<double> integration_grid(const Dataset& test, double horizon, std::size_t points = 100) {
  double lo = std::numeric_limits<double>::infinity();
  for (double t : test.times())
    if (t > 0.0) lo = std::min(lo, t);
  if (!std::isfinite(lo) || lo >= horizon) throw HorizonError("no positive observed time before the horizon");
  return linspace(lo, horizon, points);
}

namespace detail {

template <typename Pointwise>
double trapezoid_average(std::span<const double> grid, Pointwise&& f) {
  if (grid.size() < 2) throw ContractError("integration grid needs at least two points");
  double area = 0.0;
  double prev = f(grid[0]);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double cur = f(grid[i]);
    area += 0.5 * (prev + cur) * (grid[i] - grid[i - 1]);
    prev = cur;
  }
  return area / (grid.back() - grid.front());
}

}  // namespace detail

/// Integrated Brier score: trapezoid average of BS over the grid.
inline double ibs(const SurvivalPredictions& pred, const Dataset& test, const StepFunction& censoring,
                  std::span<const double> grid, std::size_t* capped = nullptr) {
  return detail::trapezoid_average(grid, [&](double t) { return brier(pred, test, censoring, t, capped); });
}

/// Integrated binomial log-likelihood over the grid.
inline double ibll(const SurvivalPredictions& pred, const Dataset& test, const StepFunction& censoring,
                   std::span<const double> grid, std::size_t* capped = nullptr) {
  return detail::trapezoid_average(
      grid, [&](double t) { return binomial_log_likelihood(pred, test, censoring, t, capped); });
}

struct DCalibration {
  double statistic = 0.0;
  double p_value = 1.0;
  std::vector<double> counts;
};

/// D-calibration: an uncensored subject puts mass 1 in the bin holding S_i(o_i);
/// a censored subject spreads mass 1 uniformly over [0, S_i(o_i)].
inline DCalibration d_calibration(std::span<const double> survival_at_observed, std::span<const int> events,
                                  std::size_t bins = 10) {
  if (survival_at_observed.empty()) throw ContractError("d_calibration requires a nonempty test set");
  if (survival_at_observed.size() != events.size()) throw ContractError("d_calibration: size mismatch");
  DCalibration out;
  out.counts.assign(bins, 0.0);
  const double width = 1.0 / static_cast<double>(bins);
  for (std::size_t i = 0; i < events.size(); ++i) {
    const double s = std::clamp(survival_at_observed[i], 0.0, 1.0);
    if (events[i] == 1) {
      const auto b = std::min(static_cast<std::size_t>(s * static_cast<double>(bins)), bins - 1);
      out.counts[b] += 1.0;
    } else if (s <= 0.0) {
      out.counts[0] += 1.0;
    } else {
      for (std::size_t b = 0; b < bins; ++b) {
        const double lo = static_cast<double>(b) * width;
        const double hi = b + 1 == bins ? 1.0 : lo + width;
        const double overlap = std::min(hi, s) - lo;
        if (overlap > 0.0) out.counts[b] += overlap / s;
      }
    }
  }
  const double expected = static_cast<double>(events.size()) / static_cast<double>(bins);
  for (double c : out.counts) out.statistic += (c - expected) * (c - expected) / expected;
  out.p_value = special::chi_square_sf(out.statistic, static_cast<double>(bins - 1));
  return out;
}

struct EvaluationHorizons {
  double full = 0.0;
  double q1 = 0.0;
  double q2 = 0.0;
  bool q1_ties_full = false;
  bool q2_ties_full = false;
  bool clamped = false;  // a test quantile exceeded the full horizon
};

/// Full horizon: the largest training time with G(t) >= 0.001.
/// q1 / q2: 25% and 50% quantiles of the test observed times.
inline EvaluationHorizons select_horizons(const Dataset& train, const Dataset& test) {
  if (train.empty() || test.empty()) throw HorizonError("horizon selection needs nonempty train and test sets");
  const StepFunction g = censoring_survival(train);
  double full = -1.0;
  for (double t : train.times())
    if (g(t) >= kHorizonSupport && t > full) full = t;
  if (!(full > 0.0)) throw HorizonError("censoring survival has no support above 0.001 at a positive time");
  EvaluationHorizons h;
  h.full = full;
  h.q1 = quantile(test.times(), 0.25);
  h.q2 = quantile(test.times(), 0.5);
  if (h.q2 > full) {
    h.q2 = full;
    h.clamped = true;
  }
  if (h.q1 > full) {
    h.q1 = full;
    h.clamped = true;
  }
  h.q1_ties_full = h.q1 == full;
  h.q2_ties_full = h.q2 == full;
  return h;
}

struct HorizonMetrics {
  double tau = 0.0;
  std::optional<double> ctd;
  double ibs = 0.0;
  double ibll = 0.0;
  std::size_t comparable_pairs = 0;
  std::size_t tied_pairs = 0;
};

inline constexpr int kReportSchemaVersion = 1;

struct EvaluationReport {
  EvaluationHorizons horizons;
  HorizonMetrics full, q1, q2;
  DCalibration dcal;
  std::size_t clip_events = 0;  // IPCW weights that hit the cap
};

/// All metrics at one horizon.
inline HorizonMetrics metrics_at(const SurvivalPredictions& pred, const Dataset& test, const StepFunction& censoring,
                                 double horizon, std::size_t* capped) {
  HorizonMetrics m;
  m.tau = horizon;
  const auto c = c_index_td(pred, test, censoring, horizon);
  m.ctd = c.value;
  m.comparable_pairs = c.comparable_pairs;
  m.tied_pairs = c.tied_pairs;
  if (capped) *capped += c.capped_weights;
  const auto grid = integration_grid(test, horizon);
  m.ibs = ibs(pred, test, censoring, grid, capped);
  m.ibll = ibll(pred, test, censoring, grid, capped);
  return m;
}

inline nlohmann::json to_json(const HorizonMetrics& m) {
  nlohmann::json j;
  j["tau"] = m.tau;
  j["ctd"] = m.ctd ? nlohmann::json(*m.ctd) : nlohmann::json(nullptr);
  j["ibs"] = m.ibs;
  j["ibll"] = m.ibll;
  j["n_comparable_pairs"] = m.comparable_pairs;
  j["n_tied_pairs"] = m.tied_pairs;
  return j;
}

inline nlohmann::json to_json(const EvaluationReport& r) {
  nlohmann::json j;
  j["schema_version"] = kReportSchemaVersion;
  j["full"] = to_json(r.full);
  j["q1"] = to_json(r.q1);
  j["q2"] = to_json(r.q2);
  j["dcal_stat"] = r.dcal.statistic;
  j["dcal_p"] = r.dcal.p_value;
  j["dcal_counts"] = r.dcal.counts;
  j["n_comparable_pairs"] = r.full.comparable_pairs;
  j["clip_events"] = r.clip_events;
  j["horizon_flags"] = {{"q1_ties_full", r.horizons.q1_ties_full},
                        {"q2_ties_full", r.horizons.q2_ties_full},
                        {"quantile_clamped_to_full", r.horizons.clamped}};
  return j;
}

}  // namespace qsurv
