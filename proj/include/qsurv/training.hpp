// SPDX-License-Identifier: Apache-2.0
#pragma once

/// Quadrature negative log-likelihood and the training loop.
///
/// For a batch B the loss is
///   -(1/|B|) sum_i [ d_i f(x_i, o_i) - (o_i / 2) sum_k w_k exp f(x_i, o_i tau_k) ].

#include <chrono>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qsurv/autodiff.hpp"
#include "qsurv/checkpoint.hpp"
#include "qsurv/data.hpp"
#include "qsurv/errors.hpp"
#include "qsurv/metrics.hpp"
#include "qsurv/model.hpp"
#include "qsurv/parallel.hpp"
#include "qsurv/quadrature.hpp"
#include "qsurv/random.hpp"

namespace qsurv {

inline constexpr int kConfigSchemaVersion = 1;

struct TrainingConfig {
  std::size_t quadrature_order = 15;
  double learning_rate = 1e-3;
  double weight_decay = 1e-4;
  std::size_t batch_size = 128;
  std::size_t max_epochs = 200;
  std::uint64_t seed = 0;
  double validation_fraction = 0.2;
  double clip_norm = 10.0;
  /// Validation metrics are computed every `eval_every` epochs and at the last epoch.
  std::size_t eval_every = 1;
  /// Grid points for the validation survival curves used by C_td / IBS.
  std::size_t val_grid_points = 20;

  std::vector<std::size_t> hidden = {32, 32};
  ad::Activation activation = ad::Activation::gelu;
  Conditioning conditioning = Conditioning::lora;
  double dropout = 0.0;
  bool batch_norm = false;
  std::size_t lora_rank = 8;
  std::size_t embed_dim = 16;
  std::size_t modulation_hidden = 32;
  std::optional<std::size_t> lora_layer;

  void validate() const {
    if (quadrature_order < 1 || quadrature_order > kMaxQuadratureOrder) {
      throw ConfigError("quadrature order K must be in [1, 64], got " + std::to_string(quadrature_order));
    }
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be > 0");
    if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be >= 0");
    if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
    if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
      throw ConfigError("validation_fraction must be in (0, 1)");
    }
    if (!(clip_norm > 0.0)) throw ConfigError("clip_norm must be > 0");
    if (eval_every < 1) throw ConfigError("eval_every must be >= 1");
    if (val_grid_points < 2) throw ConfigError("val_grid_points must be >= 2");
  }

  Architecture architecture(std::size_t input_dim) const {
    Architecture a;
    a.input_dim = input_dim;
    a.hidden = hidden;
    a.activation = activation;
    a.conditioning = conditioning;
    a.dropout = dropout;
    a.batch_norm = batch_norm;
    a.lora_rank = lora_rank;
    a.embed_dim = embed_dim;
    a.modulation_hidden = modulation_hidden;
    a.lora_layer = lora_layer;
    a.quadrature_order = quadrature_order;
    return a;
  }
};

inline nlohmann::json to_json(const TrainingConfig& c) {
  nlohmann::json j;
  j["schema_version"] = kConfigSchemaVersion;
  j["quadrature_order"] = c.quadrature_order;
  j["learning_rate"] = c.learning_rate;
  j["weight_decay"] = c.weight_decay;
  j["batch_size"] = c.batch_size;
  j["max_epochs"] = c.max_epochs;
  j["seed"] = c.seed;
  j["validation_fraction"] = c.validation_fraction;
  j["clip_norm"] = c.clip_norm;
  j["eval_every"] = c.eval_every;
  j["val_grid_points"] = c.val_grid_points;
  j["hidden"] = c.hidden;
  j["activation"] = ad::to_string(c.activation);
  j["conditioning"] = to_string(c.conditioning);
  j["dropout"] = c.dropout;
  j["batch_norm"] = c.batch_norm;
  j["lora_rank"] = c.lora_rank;
  j["embed_dim"] = c.embed_dim;
  j["modulation_hidden"] = c.modulation_hidden;
  if (c.lora_layer) j["lora_layer"] = *c.lora_layer;
  return j;
}

inline TrainingConfig training_config_from_json(const nlohmann::json& j) {
  TrainingConfig c;
  if (!j.is_object()) throw ConfigError("training config must be a JSON object");
  static const std::vector<std::string> known = {
      "schema_version", "quadrature_order", "learning_rate", "weight_decay", "batch_size", "max_epochs",
      "seed", "validation_fraction", "clip_norm", "eval_every", "val_grid_points", "hidden", "activation",
      "conditioning", "dropout", "batch_norm", "lora_rank", "embed_dim", "modulation_hidden", "lora_layer"};
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError("unknown training config key '" + key + "'");
    }
  }
  try {
    if (j.contains("schema_version") && j.at("schema_version").get<int>() != kConfigSchemaVersion) {
      throw ConfigError("unsupported training config schema_version");
    }
    c.quadrature_order = j.value("quadrature_order", c.quadrature_order);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.max_epochs = j.value("max_epochs", c.max_epochs);
    c.seed = j.value("seed", c.seed);
    c.validation_fraction = j.value("validation_fraction", c.validation_fraction);
    c.clip_norm = j.value("clip_norm", c.clip_norm);
    c.eval_every = j.value("eval_every", c.eval_every);
    c.val_grid_points = j.value("val_grid_points", c.val_grid_points);
    c.hidden = j.value("hidden", c.hidden);
    if (j.contains("activation")) c.activation = ad::activation_from_string(j.at("activation"));
    if (j.contains("conditioning")) c.conditioning = conditioning_from_string(j.at("conditioning"));
    c.dropout = j.value("dropout", c.dropout);
    c.batch_norm = j.value("batch_norm", c.batch_norm);
    c.lora_rank = j.value("lora_rank", c.lora_rank);
    c.embed_dim = j.value("embed_dim", c.embed_dim);
    c.modulation_hidden = j.value("modulation_hidden", c.modulation_hidden);
    if (j.contains("lora_layer")) c.lora_layer = j.at("lora_layer").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed training config: ") + e.what());
  }
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Loss

/// Batch loss attached to `g`. `x` holds `rows` raw covariate rows.
/// `ids` (optional) names subjects in error messages; defaults to batch position.
inline ad::Tensor nll_loss(ad::Graph& g, const HazardModel& model, const QuadratureRule& rule,
                           std::span<const double> x, std::span<const double> times, std::span<const int> events,
                           ForwardMode mode = {}, std::span<const std::size_t> ids = {}) {
  const std::size_t rows = times.size();
  if (rows == 0) throw ContractError("nll_loss needs a nonempty batch");
  if (events.size() != rows) throw ShapeError("times and events differ in length");
  const std::size_t K = rule.order, per = K + 1;
  auto subject = [&](std::size_t i) { return ids.empty() ? i : ids[i]; };

  std::vector<double> eval_times(rows * per);
  std::vector<double> c_event(rows * per, 0.0), c_quad(rows * per, 0.0);
  const double inv_b = 1.0 / static_cast<double>(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    const double o = times[i];
    double* slot = eval_times.data() + i * per;
    slot[0] = o;
    c_event[i * per] = events[i] == 1 ? -inv_b : 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      slot[k + 1] = o * rule.unit_nodes[k];
      c_quad[i * per + k + 1] = 0.5 * o * rule.weights[k] * inv_b;
    }
  }
  ad::Tensor f = model.forward(g, x, rows, eval_times, per, mode);
  const auto fv = f.values();
  for (std::size_t j = 0; j < fv.size(); ++j) {
    if (!std::isfinite(fv[j]) || fv[j] > 700.0) {
      throw NumericDomainError("non-finite hazard for subject " + std::to_string(subject(j / per)) +
                               " (log-hazard " + format_double(fv[j]) + ")");
    }
  }
  ad::Tensor hz = ad::elementwise(g, ad::Activation::exp, f);
  ad::Tensor loss = ad::add(g, ad::dot_const(g, f, c_event), ad::dot_const(g, hz, c_quad));
  if (!std::isfinite(loss.value())) {
    const auto hv = hz.values();
    for (std::size_t i = 0; i < rows; ++i) {
      double contrib = c_event[i * per] * fv[i * per];
      for (std::size_t k = 1; k < per; ++k) contrib += c_quad[i * per + k] * hv[i * per + k];
      if (!std::isfinite(contrib)) {
        throw NumericDomainError("non-finite loss contribution from subject " + std::to_string(subject(i)));
      }
    }
    throw NumericDomainError("non-finite loss");
  }
  return loss;
}

/// Loss value over a whole dataset in evaluation mode.
inline double nll_value(const HazardModel& model, const QuadratureRule& rule, const Dataset& data,
                        std::size_t chunk = 512) {
  double total = 0.0;
  for (std::size_t start = 0; start < data.size(); start += chunk) {
    const std::size_t n = std::min(chunk, data.size() - start);
    ad::Graph g = ad::Graph::inference();
    const auto loss = nll_loss(g, model, rule, data.covariates().subspan(start * data.dim(), n * data.dim()),
                               std::span(data.times()).subspan(start, n), std::span(data.events()).subspan(start, n));
    total += loss.value() * static_cast<double>(n);
  }
  return total / static_cast<double>(data.size());
}

// ---------------------------------------------------------------------------
// Optimiser

struct AdamWState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::size_t step = 0;
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-8;

/// One AdamW update with decoupled weight decay. Parameters without a
/// gradient are treated as having gradient zero.
inline void adamw_step(std::vector<NamedParameter>& params, AdamWState& state, double lr, double weight_decay) {
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.tensor.size(), 0.0);
      state.v.emplace_back(p.tensor.size(), 0.0);
    }
  }
  if (state.m.size() != params.size()) throw ContractError("optimizer state does not match parameter list");
  ++state.step;
  const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(state.step));
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto& t = params[p].tensor;
    auto values = t.values();
    const bool has = t.has_grad();
    const auto grad = std::as_const(t).grad();
    auto& m = state.m[p];
    auto& v = state.v[p];
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double gi = has ? grad[i] : 0.0;
      values[i] -= lr * weight_decay * values[i];
      m[i] = kAdamBeta1 * m[i] + (1.0 - kAdamBeta1) * gi;
      v[i] = kAdamBeta2 * v[i] + (1.0 - kAdamBeta2) * gi * gi;
      values[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + kAdamEpsilon);
    }
  }
}

/// Cosine annealing from `base` to 0 over `t_max` epochs.
inline double cosine_lr(double base, std::size_t epoch, std::size_t t_max) {
  return 0.5 * base * (1.0 + std::cos(std::numbers::pi * static_cast<double>(epoch) / static_cast<double>(t_max)));
}

/// Rescale gradients to global norm <= max_norm. Returns the norm before clipping.
inline double clip_grad_norm(std::vector<NamedParameter>& params, double max_norm) {
  double sq = 0.0;
  for (const auto& p : params)
    if (p.tensor.has_grad())
      for (double gv : p.tensor.grad()) sq += gv * gv;
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double s = max_norm / norm;
    for (auto& p : params)
      if (p.tensor.has_grad())
        for (double& gv : p.tensor.grad()) gv *= s;
  }
  return norm;
}

// ---------------------------------------------------------------------------
// Validation

/// Survival on an ascending grid by composite Gauss-Legendre over the grid
/// segments: cheaper than an independent rule per grid point.
inline std::vector<double> survival_on_grid(const HazardModel& model, std::span<const double> x, std::size_t rows,
                                            std::span<const double> grid, std::size_t nodes_per_segment = 3) {
  require_ascending_grid(grid);
  const QuadratureRule& rule = gauss_legendre(nodes_per_segment);
  const std::size_t G = grid.size(), K = rule.order, per = G * K;
  std::vector<double> times(rows * per), out(rows * G);
  for (std::size_t i = 0; i < rows; ++i) {
    double prev = 0.0;
    for (std::size_t gi = 0; gi < G; ++gi) {
      for (std::size_t k = 0; k < K; ++k) times[i * per + gi * K + k] = prev + (grid[gi] - prev) * rule.unit_nodes[k];
      prev = grid[gi];
    }
  }
  ad::Graph g = ad::Graph::inference();
  const ad::Tensor out_t = model.forward(g, x, rows, times, per);
  const auto logs = out_t.values();
  for (std::size_t i = 0; i < rows; ++i) {
    double prev = 0.0, cum = 0.0;
    for (std::size_t gi = 0; gi < G; ++gi) {
      double acc = 0.0;
      for (std::size_t k = 0; k < K; ++k) acc += rule.weights[k] * std::exp(logs[i * per + gi * K + k]);
      cum += 0.5 * (grid[gi] - prev) * acc;
      prev = grid[gi];
      out[i * G + gi] = std::exp(-cum);
    }
  }
  return out;
}

struct ValidationScore {
  double loss = 0.0;
  std::optional<double> ctd;
  std::optional<double> ibs;
};

/// Precomputed pieces of the validation metrics.
class Validator {
 public:
  Validator(const Dataset& train, const Dataset& validation, std::size_t grid_points) : val_(&validation) {
    censoring_ = censoring_survival(train);
    try {
      horizon_ = select_horizons(train, validation).full;
      grid_ = linspace(horizon_ / static_cast<double>(grid_points), horizon_, grid_points);
      ibs_grid_ = integration_grid(validation, horizon_, 100);
    } catch (const HorizonError&) {
      grid_.clear();
    }
  }

  ValidationScore operator()(const HazardModel& model, const QuadratureRule& rule, bool metrics) const {
    ValidationScore s;
    s.loss = nll_value(model, rule, *val_);
    if (!metrics || grid_.empty()) return s;
    SurvivalPredictions pred(grid_, val_->size(), survival_on_grid(model, val_->covariates(), val_->size(), grid_));
    s.ctd = c_index_td(pred, *val_, censoring_, horizon_).value;
    s.ibs = ibs(pred, *val_, censoring_, ibs_grid_);
    return s;
  }

 private:
  const Dataset* val_;
  StepFunction censoring_;
  double horizon_ = 0.0;
  std::vector<double> grid_;
  std::vector<double> ibs_grid_;
};

/// True when (ctd, ibs) beats the incumbent: higher C_td, ties broken by lower IBS.
inline bool better_selection(std::optional<double> ctd, std::optional<double> ibs, std::optional<double> best_ctd,
                             std::optional<double> best_ibs) {
  const double c = ctd.value_or(-1.0), bc = best_ctd.value_or(-1.0);
  if (c != bc) return c > bc;
  return ibs.value_or(std::numeric_limits<double>::infinity()) <
         best_ibs.value_or(std::numeric_limits<double>::infinity());
}

// ---------------------------------------------------------------------------
// Training loop

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  std::optional<double> val_ctd;
  std::optional<double> val_ibs;
  double lr = 0.0;
  std::size_t clip_events = 0;
};

inline nlohmann::json to_json(const EpochRecord& r) {
  nlohmann::json j;
  j["epoch"] = r.epoch;
  j["train_loss"] = r.train_loss;
  j["val_loss"] = r.val_loss;
  j["val_ctd"] = r.val_ctd ? nlohmann::json(*r.val_ctd) : nlohmann::json(nullptr);
  j["val_ibs"] = r.val_ibs ? nlohmann::json(*r.val_ibs) : nlohmann::json(nullptr);
  j["lr"] = r.lr;
  j["clip_events"] = r.clip_events;
  return j;
}

struct TrainingResult {
  HazardModel model;
  std::vector<EpochRecord> log;
  std::size_t best_epoch = 0;
  std::optional<double> best_val_ctd;
  std::optional<double> best_val_ibs;
  bool diverged = false;
  std::string divergence_message;
  double seconds = 0.0;
};

/// Train on `data` with a stratified validation split taken from it.
/// `on_epoch`, when set, sees each log record as it is produced.
inline TrainingResult train(const TrainingConfig& config, const Dataset& data,
                            const std::function<void(const EpochRecord&)>& on_epoch = {}) {
  const auto clock_start = std::chrono::steady_clock::now();
  config.validate();
  if (data.size() < 2) throw DegenerateDataError("training needs at least 2 subjects");
  if (data.event_count() == 0) throw DegenerateDataError("all subjects are censored; the hazard is not identifiable");

  Rng split_rng(derive_seed(config.seed, 20));
  const Split split = stratified_split(data, config.validation_fraction, split_rng);
  if (split.validation.empty() || split.train.empty()) {
    throw DegenerateDataError("dataset is too small for a train/validation split");
  }
  const Dataset train_set = data.subset(split.train);
  const Dataset val_set = data.subset(split.validation);
  if (train_set.event_count() == 0) throw DegenerateDataError("training split has no events");

  Architecture arch = config.architecture(data.dim());
  const Standardization st = fit_standardization(train_set);
  arch.covariate_mean = st.mean;
  arch.covariate_scale = st.scale;
  arch.covariate_names = data.covariate_names();
  double max_time = 0.0;
  for (double t : train_set.times()) max_time = std::max(max_time, t);
  arch.time_scale = max_time > 0.0 ? max_time : 1.0;

  TrainingResult result{HazardModel(arch, derive_seed(config.seed, 23)), {}, 0, std::nullopt, std::nullopt, false, {},
                        0.0};
  HazardModel& model = result.model;
  HazardModel best = model.clone();
  bool have_best = false;
  const QuadratureRule& rule = gauss_legendre(config.quadrature_order);
  const Validator validate(train_set, val_set, config.val_grid_points);

  Rng shuffle_rng(derive_seed(config.seed, 21));
  Rng dropout_rng(derive_seed(config.seed, 22));
  AdamWState opt;
  std::vector<std::size_t> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  const std::size_t d = train_set.dim();
  std::vector<double> bx, bt;
  std::vector<int> be;

  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    const double lr = cosine_lr(config.learning_rate, epoch, config.max_epochs);
    shuffle_rng.shuffle(order);
    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.lr = lr;
    double loss_sum = 0.0;
    try {
      for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
        const std::size_t n = std::min(config.batch_size, order.size() - start);
        bx.resize(n * d);
        bt.resize(n);
        be.resize(n);
        std::vector<std::size_t> ids(order.begin() + static_cast<std::ptrdiff_t>(start),
                                     order.begin() + static_cast<std::ptrdiff_t>(start + n));
        for (std::size_t i = 0; i < n; ++i) {
          const auto xi = train_set.x(ids[i]);
          std::copy(xi.begin(), xi.end(), bx.begin() + static_cast<std::ptrdiff_t>(i * d));
          bt[i] = train_set.time(ids[i]);
          be[i] = train_set.event(ids[i]);
        }
        model.zero_grad();
        ad::Graph g;
        ad::Tensor loss = nll_loss(g, model, rule, bx, bt, be, {true, &dropout_rng}, ids);
        g.backward(loss);
        if (clip_grad_norm(model.parameters(), config.clip_norm) > config.clip_norm) ++rec.clip_events;
        adamw_step(model.parameters(), opt, lr, config.weight_decay);
        for (const auto& p : model.parameters()) {
          for (double v : p.tensor.values())
            if (!std::isfinite(v)) throw NumericDomainError("parameter '" + p.name + "' became non-finite");
        }
        loss_sum += loss.value() * static_cast<double>(n);
      }
      rec.train_loss = loss_sum / static_cast<double>(order.size());
      const bool metrics = (epoch + 1) % config.eval_every == 0 || epoch + 1 == config.max_epochs;
      const ValidationScore vs = validate(model, rule, metrics);
      rec.val_loss = vs.loss;
      rec.val_ctd = vs.ctd;
      rec.val_ibs = vs.ibs;
      if (metrics && (!have_best || better_selection(vs.ctd, vs.ibs, result.best_val_ctd, result.best_val_ibs))) {
        best.copy_state_from(model);
        have_best = true;
        result.best_epoch = epoch + 1;
        result.best_val_ctd = vs.ctd;
        result.best_val_ibs = vs.ibs;
      }
    } catch (const NumericDomainError& e) {
      result.diverged = true;
      result.divergence_message = e.what();
      break;
    }
    result.log.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }

  if (have_best) {
    model.copy_state_from(best);
  } else if (result.diverged) {
    if (result.log.empty()) throw NumericDomainError("training diverged in the first epoch: " + result.divergence_message);
    // No evaluated snapshot: fall back to the initial parameters, which are finite.
    model.copy_state_from(best);
  }
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_start).count();
  return result;
}

// ---------------------------------------------------------------------------
// Persistence

inline constexpr const char* kCheckpointFile = "checkpoint.json";
inline constexpr const char* kArchitectureFile = "architecture.json";

inline nlohmann::json model_checkpoint_json(const HazardModel& model) {
  nlohmann::json doc = checkpoint_to_json(model.parameters());
  doc["batch_norm_statistics"] = model.running_statistics();
  return doc;
}

inline void save_model(const std::filesystem::path& dir, const HazardModel& model) {
  std::filesystem::create_directories(dir);
  std::ofstream(dir / kCheckpointFile) << model_checkpoint_json(model).dump(1) << '\n';
  std::ofstream(dir / kArchitectureFile) << to_json(model.architecture()).dump(2) << '\n';
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open '" + path.string() + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw IngestionError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

/// Load a model directory. A path to checkpoint.json is also accepted.
inline HazardModel load_model(std::filesystem::path dir) {
  if (std::filesystem::is_regular_file(dir)) dir = dir.parent_path();
  const Architecture arch = architecture_from_json(read_json_file(dir / kArchitectureFile));
  HazardModel model(arch, 0);
  const nlohmann::json doc = read_json_file(dir / kCheckpointFile);
  load_checkpoint(doc, model.parameters());
  if (doc.contains("batch_norm_statistics")) model.load_running_statistics(doc.at("batch_norm_statistics"));
  return model;
}

// ---------------------------------------------------------------------------
// Random search

inline constexpr int kSearchSpaceSchemaVersion = 1;

struct SearchSpace {
  std::vector<std::size_t> layers = {2, 3, 4};
  std::vector<std::size_t> hidden = {32, 64, 128, 256};
  double lr_min = 1e-4, lr_max = 1e-2;
  double wd_min = 1e-8, wd_max = 1e-3;
  std::vector<double> dropout = {0.0, 0.1, 0.3, 0.5};
  std::vector<std::size_t> batch_size = {64, 128, 256};
  std::vector<bool> batch_norm = {true, false};

  void validate() const {
    if (layers.empty() || hidden.empty() || dropout.empty() || batch_size.empty() || batch_norm.empty()) {
      throw ConfigError("search space lists must be nonempty");
    }
    if (!(lr_min > 0.0 && lr_min <= lr_max)) throw ConfigError("learning-rate range must satisfy 0 < min <= max");
    if (!(wd_min > 0.0 && wd_min <= wd_max)) throw ConfigError("weight-decay range must satisfy 0 < min <= max");
  }
};

inline SearchSpace search_space_from_json(const nlohmann::json& j) {
  SearchSpace s;
  try {
    s.layers = j.value("layers", s.layers);
    s.hidden = j.value("hidden", s.hidden);
    if (j.contains("learning_rate")) {
      s.lr_min = j.at("learning_rate").at(0);
      s.lr_max = j.at("learning_rate").at(1);
    }
    if (j.contains("weight_decay")) {
      s.wd_min = j.at("weight_decay").at(0);
      s.wd_max = j.at("weight_decay").at(1);
    }
    s.dropout = j.value("dropout", s.dropout);
    s.batch_size = j.value("batch_size", s.batch_size);
    s.batch_norm = j.value("batch_norm", s.batch_norm);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed search space: ") + e.what());
  }
  s.validate();
  return s;
}

inline nlohmann::json to_json(const SearchSpace& s) {
  return {{"schema_version", kSearchSpaceSchemaVersion},
          {"layers", s.layers},
          {"hidden", s.hidden},
          {"learning_rate", {s.lr_min, s.lr_max}},
          {"weight_decay", {s.wd_min, s.wd_max}},
          {"dropout", s.dropout},
          {"batch_size", s.batch_size},
          {"batch_norm", s.batch_norm}};
}

/// Draw one configuration; fields outside the space are copied from `base`.
inline TrainingConfig sample_config(const SearchSpace& space, const TrainingConfig& base, Rng& rng) {
  auto pick = [&](const auto& v) { return v[rng.below(v.size())]; };
  TrainingConfig c = base;
  const std::size_t layers = pick(space.layers);
  c.hidden.assign(layers, pick(space.hidden));
  c.learning_rate = rng.log_uniform(space.lr_min, space.lr_max);
  c.weight_decay = rng.log_uniform(space.wd_min, space.wd_max);
  c.dropout = pick(space.dropout);
  c.batch_size = pick(space.batch_size);
  c.batch_norm = pick(space.batch_norm);
  return c;
}

struct TrialRecord {
  std::size_t trial = 0;
  TrainingConfig config;
  std::optional<double> val_ctd;
  std::optional<double> val_ibs;
  std::string status = "ok";
};

struct SearchResult {
  std::vector<TrialRecord> trials;
  std::size_t best_trial = 0;
  TrainingConfig best_config;
  HazardModel best_model;
};

/// Random search: each trial trains with seed derived from (base.seed, trial).
/// Failed trials are recorded and skipped. Trials may run on several threads;
/// configurations are drawn up front and results are merged in trial order,
/// so the outcome does not depend on `threads`.
inline SearchResult random_search(const SearchSpace& space, std::size_t trials, const Dataset& data,
                                  const TrainingConfig& base,
                                  const std::function<void(const TrialRecord&)>& on_trial = {},
                                  std::size_t threads = 1) {
  if (trials < 1) throw ConfigError("trials must be >= 1");
  space.validate();
  Rng rng(derive_seed(base.seed, 30));
  std::vector<TrialRecord> records(trials);
  for (std::size_t t = 0; t < trials; ++t) {
    records[t].trial = t;
    records[t].config = sample_config(space, base, rng);
    records[t].config.seed = derive_seed(base.seed, 1000 + t);
  }
  std::vector<std::optional<HazardModel>> models(trials);
  parallel_for(trials, threads, [&](std::size_t t) {
    try {
      TrainingResult r = train(records[t].config, data);
      records[t].val_ctd = r.best_val_ctd;
      records[t].val_ibs = r.best_val_ibs;
      models[t] = std::move(r.model);
    } catch (const Error& e) {
      records[t].status = std::string("failed: ") + e.what();
    }
  });

  SearchResult out;
  bool have = false;
  for (std::size_t t = 0; t < trials; ++t) {
    const TrialRecord& rec = records[t];
    if (models[t] && (!have || better_selection(rec.val_ctd, rec.val_ibs, records[out.best_trial].val_ctd,
                                                records[out.best_trial].val_ibs))) {
      have = true;
      out.best_trial = t;
      out.best_config = rec.config;
    }
    if (on_trial) on_trial(rec);
  }
  if (!have) throw NumericDomainError("every search trial failed");
  out.best_model = std::move(*models[out.best_trial]);
  out.trials = std::move(records);
  return out;
}

}  // namespace qsurv
