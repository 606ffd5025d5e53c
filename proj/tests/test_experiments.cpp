// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "qsurv/qsurv.hpp"

using namespace qsurv;

namespace {

TrainingConfig tiny_config() {
  TrainingConfig c;
  c.hidden = {8, 8};
  c.lora_rank = 3;
  c.embed_dim = 4;
  c.modulation_hidden = 8;
  c.max_epochs = 3;
  c.batch_size = 64;
  c.learning_rate = 5e-3;
  return c;
}

GeneratorSpec small_spec(Family f, std::size_t n) {
  GeneratorSpec spec = make_spec(f);
  spec.n_train = n;
  spec.n_test = n;
  return spec;
}

}  // namespace

TEST(Spearman, KnownValues) {
  EXPECT_DOUBLE_EQ(spearman({1, 2, 3, 4}, {10, 20, 30, 40}), 1.0);
  EXPECT_DOUBLE_EQ(spearman({1, 2, 3, 4}, {4, 3, 2, 1}), -1.0);
  // Ranks of b are {1, 3, 2, 4}: rho = 1 - 6 * 2 / (4 * 15) = 0.8.
  EXPECT_NEAR(spearman({1, 2, 3, 4}, {1, 5, 2, 9}), 0.8, 1e-15);
  EXPECT_DOUBLE_EQ(spearman({1, 1, 1}, {1, 2, 3}), 0.0);
  EXPECT_THROW(spearman({1}, {1}), ContractError);
}

TEST(Spearman, TiesGetAverageRanks) {
  const auto r = average_ranks({3.0, 1.0, 3.0, 2.0});
  EXPECT_EQ(r, (std::vector<double>{3.5, 1.0, 3.5, 2.0}));
}

TEST(Spearman, InvariantUnderMonotoneMaps) {
  Rng rng(5);
  std::vector<double> a(50), b(50), c(50);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = rng.normal();
    b[i] = a[i] + rng.normal();
    c[i] = std::exp(3.0 * b[i]);
  }
  EXPECT_NEAR(spearman(a, b), spearman(a, c), 1e-15);
}

TEST(Evaluate, ReportIsFiniteAndWellFormed) {
  const SimulatedData data = simulate(small_spec(Family::weibull, 300), 1);
  const TrainingResult r = train(tiny_config(), data.train);
  const EvaluationReport rep = evaluate_model(r.model, data.train, data.test);
  for (const auto* m : {&rep.full, &rep.q1, &rep.q2}) {
    ASSERT_TRUE(m->ctd.has_value());
    EXPECT_GE(*m->ctd, 0.0);
    EXPECT_LE(*m->ctd, 1.0);
    EXPECT_TRUE(std::isfinite(m->ibs));
    EXPECT_GE(m->ibs, 0.0);
    EXPECT_LE(m->ibll, 0.0);
  }
  EXPECT_LE(rep.horizons.q1, rep.horizons.q2);
  EXPECT_LE(rep.horizons.q2, rep.horizons.full);
  EXPECT_GE(rep.dcal.p_value, 0.0);
  EXPECT_LE(rep.dcal.p_value, 1.0);
  double total = 0.0;
  for (double c : rep.dcal.counts) total += c;
  EXPECT_NEAR(total, static_cast<double>(data.test.size()), 1e-9);
}

TEST(Evaluate, SurvivalAtObservedMatchesApi) {
  const SimulatedData data = simulate(small_spec(Family::exponential, 50), 2);
  const TrainingResult r = train(tiny_config(), data.train);
  const auto s = survival_at_observed(r.model, data.test);
  const QuadratureRule& rule = gauss_legendre(r.model.architecture().quadrature_order);
  for (std::size_t i = 0; i < data.test.size(); i += 7)
    EXPECT_NEAR(s[i], survival(r.model, rule, data.test.x(i), data.test.time(i)), 1e-13);
}

TEST(Evaluate, DimensionMismatchIsShapeError) {
  const SimulatedData data = simulate(small_spec(Family::exponential, 60), 3);
  const TrainingResult r = train(tiny_config(), data.train);
  Dataset wide({"a", "b"});
  const double x[2] = {0.0, 1.0};
  wide.add(x, 1.0, 1);
  EXPECT_THROW(evaluate_model(r.model, data.train, wide), ShapeError);
}

TEST(Sweep, CellsInOrderAndThreadIndependent) {
  const GeneratorSpec spec = small_spec(Family::scenario2, 200);
  SweepOptions opt;
  opt.k_values = {1, 3};
  opt.seeds = {0, 1};
  const auto a = sweep_nodes(spec, tiny_config(), opt);
  opt.threads = 4;
  const auto b = sweep_nodes(spec, tiny_config(), opt);
  ASSERT_EQ(a.size(), 4u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].k, opt.k_values[i / 2]);
    EXPECT_EQ(a[i].seed, opt.seeds[i % 2]);
    EXPECT_EQ(a[i].status, "ok");
    EXPECT_EQ(a[i].k, b[i].k);
    EXPECT_EQ(a[i].iae_hazard, b[i].iae_hazard);
    EXPECT_EQ(a[i].iae_survival, b[i].iae_survival);
    EXPECT_GT(a[i].iae_hazard, 0.0);
    EXPECT_GT(a[i].iae_cumhaz, 0.0);
  }
}

TEST(Sweep, SingleCellEqualsTrainThenScore) {
  const GeneratorSpec spec = small_spec(Family::exponential, 150);
  TrainingConfig c = tiny_config();
  const SweepCell cell = run_sweep_cell(spec, c, 4, 9, false);
  const SimulatedData data = simulate(spec, 9);
  c.quadrature_order = 4;
  c.seed = 9;
  const TrainingResult r = train(c, data.train);
  const L1Error e = l1_error(r.model, gauss_legendre(4), GroundTruth(spec), data.test, evaluation_grid(data.train));
  EXPECT_EQ(cell.iae_hazard, e.hazard);
  EXPECT_EQ(cell.iae_cumhaz, e.cumhaz);
  EXPECT_EQ(cell.iae_survival, e.survival);
}

TEST(Sweep, BadOptionsRejected) {
  const GeneratorSpec spec = small_spec(Family::exponential, 50);
  SweepOptions opt;
  opt.k_values = {};
  EXPECT_THROW(sweep_nodes(spec, tiny_config(), opt), ConfigError);
  opt.k_values = {0};
  EXPECT_THROW(sweep_nodes(spec, tiny_config(), opt), ConfigError);
  opt.k_values = {2};
  opt.seeds = {};
  EXPECT_THROW(sweep_nodes(spec, tiny_config(), opt), ConfigError);
}

TEST(Sweep, FailingCellIsRecorded) {
  GeneratorSpec spec = small_spec(Family::exponential, 50);
  TrainingConfig c = tiny_config();
  c.learning_rate = -1.0;
  const SweepCell cell = run_sweep_cell(spec, c, 2, 0, true);
  EXPECT_EQ(cell.status.rfind("failed", 0), 0u) << cell.status;
}
