// SPDX-License-Identifier: Apache-2.0
#pragma once

/// End-to-end pieces built from the library: test-set evaluation of a fitted
/// model and the node-count sweep.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "qsurv/metrics.hpp"
#include "qsurv/parallel.hpp"
#include "qsurv/simulation.hpp"
#include "qsurv/training.hpp"

namespace qsurv {

/// Model survival at each subject's own observed time, using the model's rule.
inline std::vector<double> survival_at_observed(const HazardModel& model, const Dataset& data) {
  const QuadratureRule& rule = gauss_legendre(model.architecture().quadrature_order);
  const std::size_t n = data.size(), K = rule.order, d = model.input_dim();
  std::vector<double> out(n);
  constexpr std::size_t chunk = 256;
  for (std::size_t start = 0; start < n; start += chunk) {
    const std::size_t rows = std::min(chunk, n - start);
    std::vector<double> times(rows * K);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t k = 0; k < K; ++k) times[i * K + k] = data.time(start + i) * rule.unit_nodes[k];
    ad::Graph g = ad::Graph::inference();
    const ad::Tensor f = model.forward(g, data.covariates().subspan(start * d, rows * d), rows, times, K);
    const auto logs = f.values();
    for (std::size_t i = 0; i < rows; ++i) {
      double acc = 0.0;
      for (std::size_t k = 0; k < K; ++k) acc += rule.weights[k] * std::exp(logs[i * K + k]);
      const double cum = 0.5 * data.time(start + i) * acc;
      if (!std::isfinite(cum)) throw NumericDomainError("non-finite cumulative hazard for subject " + std::to_string(start + i));
      out[start + i] = std::exp(-cum);
    }
  }
  return out;
}

/// Score a fitted model on `test`, with the censoring distribution taken from
/// `train`. Survival curves are evaluated on `grid_points` equally spaced
/// times up to the largest test time and interpolated linearly in between.
inline EvaluationReport evaluate_model(const HazardModel& model, const Dataset& train, const Dataset& test,
                                       std::size_t grid_points = 200) {
  if (test.dim() != model.input_dim()) {
    throw ShapeError("test set has " + std::to_string(test.dim()) + " covariates, model expects " +
                     std::to_string(model.input_dim()));
  }
  if (test.empty()) throw DegenerateDataError("test set is empty");
  EvaluationReport report;
  report.horizons = select_horizons(train, test);
  const StepFunction censoring = censoring_survival(train);
  const double t_max = std::max(*std::max_element(test.times().begin(), test.times().end()), report.horizons.full);
  const auto grid = linspace(t_max / static_cast<double>(grid_points), t_max, grid_points);
  const QuadratureRule& rule = gauss_legendre(model.architecture().quadrature_order);
  CurveTable table = predict_curves(model, rule, test.covariates(), test.size(), grid);
  const SurvivalPredictions pred(grid, test.size(), std::move(table.survival));
  report.full = metrics_at(pred, test, censoring, report.horizons.full, &report.clip_events);
  report.q1 = metrics_at(pred, test, censoring, report.horizons.q1, &report.clip_events);
  report.q2 = metrics_at(pred, test, censoring, report.horizons.q2, &report.clip_events);
  report.dcal = d_calibration(survival_at_observed(model, test), test.events());
  return report;
}

struct SweepCell {
  std::size_t k = 0;
  std::uint64_t seed = 0;
  double iae_survival = 0.0;
  double iae_cumhaz = 0.0;
  double iae_hazard = 0.0;
  double train_seconds = 0.0;
  std::size_t best_epoch = 0;
  std::string status = "ok";
};

struct SweepOptions {
  std::vector<std::size_t> k_values = {1, 2, 3, 5, 7, 10};
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
  std::size_t threads = 1;
  /// Skip the quadrature-based S and Lambda errors (they stay 0).
  bool hazard_only = false;
};

/// One cell: simulate with `seed`, train with K nodes, score on the test split.
/// The data depend on the seed only, so every K sees the same samples.
inline SweepCell run_sweep_cell(const GeneratorSpec& spec, const TrainingConfig& base, std::size_t k,
                                std::uint64_t seed, bool hazard_only) {
  SweepCell cell;
  cell.k = k;
  cell.seed = seed;
  try {
    const SimulatedData data = simulate(spec, seed);
    TrainingConfig config = base;
    config.quadrature_order = k;
    config.seed = seed;
    const TrainingResult r = train(config, data.train);
    cell.train_seconds = r.seconds;
    cell.best_epoch = r.best_epoch;
    const auto grid = evaluation_grid(data.train);
    const L1Error err = l1_error(r.model, gauss_legendre(k), GroundTruth(spec), data.test, grid, hazard_only);
    cell.iae_survival = err.survival;
    cell.iae_cumhaz = err.cumhaz;
    cell.iae_hazard = err.hazard;
    if (r.diverged) cell.status = "diverged: " + r.divergence_message;
  } catch (const Error& e) {
    cell.status = std::string("failed: ") + e.what();
  }
  return cell;
}

/// Every (K, seed) cell, in K-major order regardless of thread count.
/// A failing cell is recorded and the sweep continues.
inline std::vector<SweepCell> sweep_nodes(const GeneratorSpec& spec, const TrainingConfig& base,
                                          const SweepOptions& options) {
  if (options.k_values.empty()) throw ConfigError("the K list must be nonempty");
  if (options.seeds.empty()) throw ConfigError("the seed list must be nonempty");
  for (auto k : options.k_values) {
    if (k < 1 || k > kMaxQuadratureOrder) throw ConfigError("K values must be in [1, 64], got " + std::to_string(k));
  }
  const std::size_t n_seeds = options.seeds.size();
  std::vector<SweepCell> cells(options.k_values.size() * n_seeds);
  parallel_for(cells.size(), options.threads, [&](std::size_t i) {
    cells[i] = run_sweep_cell(spec, base, options.k_values[i / n_seeds], options.seeds[i % n_seeds],
                              options.hazard_only);
  });
  return cells;
}

/// Average ranks (ties share the mean rank), 1-based.
inline std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t m = i; m <= j; ++m) ranks[order[m]] = r;
    i = j + 1;
  }
  return ranks;
}

/// Spearman rank correlation: Pearson correlation of the average ranks.
inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw ContractError("spearman needs two equal-length samples (n >= 2)");
  const auto ra = average_ranks(a), rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace qsurv
