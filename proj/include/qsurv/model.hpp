// SPDX-License-Identifier: Apache-2.0
#pragma once

/// Log-hazard network f(x, t) with three time-conditioning heads.
///
///   concat : time is appended to the covariates; every hidden layer sees t.
///   film   : the last hidden layer is modulated channel-wise,
///            z(t) = (1 + gamma(t)) * (W h + b) + beta(t).
///   lora   : the last hidden layer gets a time-dependent low-rank update,
///            z(t) = W h + U (s(t) * (V h)) + b,  s(t) = g(phi(t)).
///
/// For film and lora the backbone output h does not depend on t, so W h and
/// V h are computed once per subject and shared by all evaluation times.
/// The hazard is exp(f(x, t)).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qsurv/autodiff.hpp"
#include "qsurv/checkpoint.hpp"
#include "qsurv/errors.hpp"
#include "qsurv/quadrature.hpp"
#include "qsurv/random.hpp"

namespace qsurv {

enum class Conditioning { concat, film, lora };

inline std::string to_string(Conditioning c) {
  switch (c) {
    case Conditioning::concat: return "concat";
    case Conditioning::film: return "film";
    case Conditioning::lora: return "lora";
  }
  return "?";
}

inline Conditioning conditioning_from_string(const std::string& s) {
  if (s == "concat") return Conditioning::concat;
  if (s == "film") return Conditioning::film;
  if (s == "lora") return Conditioning::lora;
  throw ConfigError("unknown conditioning '" + s + "' (expected concat, film or lora)");
}

inline constexpr int kArchitectureSchemaVersion = 1;

struct Architecture {
  std::size_t input_dim = 1;
  std::vector<std::size_t> hidden = {32, 32};
  ad::Activation activation = ad::Activation::gelu;
  Conditioning conditioning = Conditioning::lora;
  double dropout = 0.0;
  bool batch_norm = false;
  std::size_t lora_rank = 8;
  std::size_t embed_dim = 16;
  std::size_t modulation_hidden = 32;
  /// Index of the time-modulated hidden layer; only the last one is accepted.
  std::optional<std::size_t> lora_layer;
  /// Times are divided by this before entering the network.
  double time_scale = 1.0;
  /// Quadrature order the model was trained with.
  std::size_t quadrature_order = 15;
  /// Covariates are standardised as (x - mean) / scale inside the model.
  std::vector<double> covariate_mean;
  std::vector<double> covariate_scale;
  std::vector<std::string> covariate_names;

  std::size_t conditioned_input_dim() const {
    return hidden.size() >= 2 ? hidden[hidden.size() - 2] : input_dim;
  }

  void validate() const {
    if (input_dim == 0) throw ConfigError("input_dim must be positive");
    if (hidden.empty()) throw ConfigError("at least one hidden layer is required");
    for (auto h : hidden)
      if (h == 0) throw ConfigError("hidden layer sizes must be positive");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must be in [0, 1)");
    if (!(time_scale > 0.0) || !std::isfinite(time_scale)) throw ConfigError("time_scale must be positive");
    if (quadrature_order == 0 || quadrature_order > kMaxQuadratureOrder)
      throw ConfigError("quadrature order must be in [1, 64]");
    if (conditioning != Conditioning::concat) {
      if (embed_dim < 1) throw ConfigError("embed_dim must be positive");
      if (modulation_hidden < 1) throw ConfigError("modulation_hidden must be positive");
    }
    if (lora_layer && (conditioning != Conditioning::lora || *lora_layer != hidden.size() - 1)) {
      throw ConfigError("Time-LoRA may only modulate the penultimate layer (hidden layer index " +
                        std::to_string(hidden.size() - 1) + ")");
    }
    if (conditioning == Conditioning::lora) {
      const std::size_t d_in = conditioned_input_dim(), d_out = hidden.back();
      if (lora_rank == 0 || lora_rank >= std::min(d_in, d_out)) {
        throw ConfigError("lora rank " + std::to_string(lora_rank) + " must satisfy 0 < r < min(" +
                          std::to_string(d_in) + ", " + std::to_string(d_out) + ")");
      }
    }
    if (!covariate_mean.empty() && covariate_mean.size() != input_dim)
      throw ConfigError("covariate_mean length does not match input_dim");
    if (!covariate_scale.empty() && covariate_scale.size() != input_dim)
      throw ConfigError("covariate_scale length does not match input_dim");
  }
};

inline nlohmann::json to_json(const Architecture& a) {
  nlohmann::json j;
  j["schema_version"] = kArchitectureSchemaVersion;
  j["input_dim"] = a.input_dim;
  j["hidden"] = a.hidden;
  j["activation"] = ad::to_string(a.activation);
  j["conditioning"] = to_string(a.conditioning);
  j["dropout"] = a.dropout;
  j["batch_norm"] = a.batch_norm;
  j["lora_rank"] = a.lora_rank;
  j["embed_dim"] = a.embed_dim;
  j["modulation_hidden"] = a.modulation_hidden;
  if (a.lora_layer) j["lora_layer"] = *a.lora_layer;
  j["time_scale"] = a.time_scale;
  j["quadrature_order"] = a.quadrature_order;
  j["covariate_mean"] = a.covariate_mean;
  j["covariate_scale"] = a.covariate_scale;
  j["covariate_names"] = a.covariate_names;
  return j;
}

inline Architecture architecture_from_json(const nlohmann::json& j) {
  Architecture a;
  try {
    a.input_dim = j.value("input_dim", a.input_dim);
    a.hidden = j.value("hidden", a.hidden);
    if (j.contains("activation")) a.activation = ad::activation_from_string(j.at("activation"));
    if (j.contains("conditioning")) a.conditioning = conditioning_from_string(j.at("conditioning"));
    a.dropout = j.value("dropout", a.dropout);
    a.batch_norm = j.value("batch_norm", a.batch_norm);
    a.lora_rank = j.value("lora_rank", a.lora_rank);
    a.embed_dim = j.value("embed_dim", a.embed_dim);
    a.modulation_hidden = j.value("modulation_hidden", a.modulation_hidden);
    if (j.contains("lora_layer")) a.lora_layer = j.at("lora_layer").get<std::size_t>();
    a.time_scale = j.value("time_scale", a.time_scale);
    a.quadrature_order = j.value("quadrature_order", a.quadrature_order);
    a.covariate_mean = j.value("covariate_mean", a.covariate_mean);
    a.covariate_scale = j.value("covariate_scale", a.covariate_scale);
    a.covariate_names = j.value("covariate_names", a.covariate_names);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed architecture descriptor: ") + e.what());
  }
  a.validate();
  return a;
}

/// Training-mode switches for a forward pass. Default is evaluation mode.
struct ForwardMode {
  bool training = false;
  Rng* rng = nullptr;  // dropout masks; required when training with dropout
};

class HazardModel {
 public:
  HazardModel() = default;
  // Tensors are shared handles; copying would alias parameters. Use clone().
  HazardModel(const HazardModel&) = delete;
  HazardModel& operator=(const HazardModel&) = delete;
  HazardModel(HazardModel&&) = default;
  HazardModel& operator=(HazardModel&&) = default;

  explicit HazardModel(Architecture arch, std::uint64_t seed = 0) : arch_(std::move(arch)) {
    arch_.validate();
    Rng rng(seed);
    build(rng);
  }

  const Architecture& architecture() const { return arch_; }
  Architecture& architecture() { return arch_; }
  std::size_t input_dim() const { return arch_.input_dim; }
  Conditioning conditioning() const { return arch_.conditioning; }

  /// Every learnable tensor, in a fixed order.
  const std::vector<NamedParameter>& parameters() const { return params_; }
  std::vector<NamedParameter>& parameters() { return params_; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.tensor.size();
    return n;
  }

  ad::Tensor& parameter(const std::string& name) {
    for (auto& p : params_)
      if (p.name == name) return p.tensor;
    throw ContractError("no parameter named '" + name + "'");
  }

  void zero_grad() {
    for (auto& p : params_) p.tensor.zero_grad();
  }

  /// Deep copy: parameters and running statistics are duplicated.
  HazardModel clone() const {
    HazardModel copy(arch_, 0);
    copy.copy_state_from(*this);
    return copy;
  }

  void copy_state_from(const HazardModel& other) {
    for (std::size_t i = 0; i < params_.size(); ++i) {
      auto src = other.params_[i].tensor.values();
      std::copy(src.begin(), src.end(), params_[i].tensor.values().begin());
    }
    for (std::size_t i = 0; i < backbone_.size(); ++i) {
      if (backbone_[i].bn) {
        backbone_[i].bn->running_mean = other.backbone_[i].bn->running_mean;
        backbone_[i].bn->running_var = other.backbone_[i].bn->running_var;
      }
    }
  }

  /// Batch-norm running averages are part of the saved state.
  nlohmann::json running_statistics() const {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& layer : backbone_) {
      if (layer.bn) j.push_back({{"mean", layer.bn->running_mean}, {"var", layer.bn->running_var}});
    }
    return j;
  }

  void load_running_statistics(const nlohmann::json& j) {
    std::size_t idx = 0;
    for (auto& layer : backbone_) {
      if (!layer.bn) continue;
      if (idx >= j.size()) throw IngestionError("checkpoint is missing batch-norm statistics");
      layer.bn->running_mean = j.at(idx).at("mean").get<std::vector<double>>();
      layer.bn->running_var = j.at(idx).at("var").get<std::vector<double>>();
      ++idx;
    }
  }

  /// Raw covariates -> standardised [rows x d] tensor.
  ad::Tensor covariate_tensor(std::span<const double> x, std::size_t rows) const {
    const std::size_t d = arch_.input_dim;
    if (x.size() != rows * d) {
      throw ShapeError("expected " + std::to_string(rows) + " covariate rows of dimension " +
                       std::to_string(d) + ", got " + std::to_string(x.size()) + " values");
    }
    std::vector<double> v(x.begin(), x.end());
    if (!arch_.covariate_mean.empty() || !arch_.covariate_scale.empty()) {
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < d; ++c) {
          double& e = v[r * d + c];
          if (!arch_.covariate_mean.empty()) e -= arch_.covariate_mean[c];
          if (!arch_.covariate_scale.empty()) e /= arch_.covariate_scale[c];
        }
    }
    return ad::Tensor::from({rows, d}, std::move(v));
  }

  /// Log-hazard for `rows` subjects at `per_subject` times each.
  /// `x` holds raw covariates row-major; `times` holds rows*per_subject values,
  /// subject-major. Returns a [rows*per_subject x 1] tensor in the same order.
  ad::Tensor forward(ad::Graph& g, std::span<const double> x, std::size_t rows, std::span<const double> times,
                     std::size_t per_subject, ForwardMode mode = {}) const {
    if (times.size() != rows * per_subject) {
      throw ShapeError("expected " + std::to_string(rows * per_subject) + " times, got " +
                       std::to_string(times.size()));
    }
    for (double t : times) {
      if (!(t >= 0.0) || !std::isfinite(t)) throw ContractError("evaluation times must be finite and >= 0");
    }
    const ad::Tensor xs = covariate_tensor(x, rows);
    std::vector<double> scaled(times.begin(), times.end());
    for (double& t : scaled) t /= arch_.time_scale;
    const ad::Tensor tcol = ad::Tensor::from({rows * per_subject, 1}, std::move(scaled));

    if (arch_.conditioning == Conditioning::concat) {
      ad::Tensor input = ad::concat_cols(g, ad::repeat_rows(g, xs, per_subject), tcol);
      ad::Tensor h = run_backbone(g, input, mode);
      return ad::affine(g, out_w_, out_b_, h);
    }

    ad::Tensor h = run_backbone(g, xs, mode);
    ad::Tensor base = ad::affine(g, cond_w_, cond_b_, h);  // W h + b, once per subject
    ad::Tensor base_rep = ad::repeat_rows(g, base, per_subject);
    ad::Tensor phi = ad::periodic(g, ad::affine(g, omega_, phase_, tcol));
    ad::Tensor mod_hidden = ad::elementwise(g, arch_.activation, ad::affine(g, mod1_w_, mod1_b_, phi));

    ad::Tensor z;
    if (arch_.conditioning == Conditioning::lora) {
      ad::Tensor vh = ad::linear(g, lora_v_, h);  // V h, once per subject
      ad::Tensor s = ad::affine(g, mod2_w_, mod2_b_, mod_hidden);
      ad::Tensor gated = ad::mul(g, s, ad::repeat_rows(g, vh, per_subject));
      z = ad::add(g, base_rep, ad::linear(g, lora_u_, gated));
    } else {
      ad::Tensor gamma = ad::affine(g, mod2_w_, mod2_b_, mod_hidden);
      ad::Tensor beta = ad::affine(g, film_beta_w_, film_beta_b_, mod_hidden);
      z = ad::add(g, ad::add(g, base_rep, ad::mul(g, base_rep, gamma)), beta);
    }
    ad::Tensor a = ad::elementwise(g, arch_.activation, z);
    return ad::affine(g, out_w_, out_b_, a);
  }

  /// Conditioned layer with the time branch removed (film/lora only):
  /// f(x) = out(act(W h + b)).
  ad::Tensor forward_static(ad::Graph& g, std::span<const double> x, std::size_t rows) const {
    if (arch_.conditioning == Conditioning::concat) throw ContractError("concat models have no static head");
    const ad::Tensor xs = covariate_tensor(x, rows);
    ad::Tensor h = run_backbone(g, xs, {});
    ad::Tensor a = ad::elementwise(g, arch_.activation, ad::affine(g, cond_w_, cond_b_, h));
    return ad::affine(g, out_w_, out_b_, a);
  }

 private:
  struct DenseLayer {
    ad::Tensor weight;
    ad::Tensor bias;
    std::optional<ad::BatchNormState> bn;
  };

  ad::Tensor make_param(const std::string& name, ad::Shape shape) {
    ad::Tensor t = ad::Tensor::zeros(std::move(shape), true);
    params_.push_back({name, t});
    return t;
  }

  // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weight and bias.
  static void init_uniform(ad::Tensor& t, std::size_t fan_in, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (double& v : t.values()) v = rng.uniform(-bound, bound);
  }

  void build(Rng& rng) {
    const std::size_t layers = arch_.hidden.size();
    const bool concat = arch_.conditioning == Conditioning::concat;
    const std::size_t backbone_layers = concat ? layers : layers - 1;
    std::size_t fan_in = arch_.input_dim + (concat ? 1 : 0);
    for (std::size_t l = 0; l < backbone_layers; ++l) {
      const std::size_t width = arch_.hidden[l];
      const std::string prefix = "backbone." + std::to_string(l);
      DenseLayer layer;
      layer.weight = make_param(prefix + ".weight", {width, fan_in});
      layer.bias = make_param(prefix + ".bias", {width});
      init_uniform(layer.weight, fan_in, rng);
      init_uniform(layer.bias, fan_in, rng);
      if (arch_.batch_norm) {
        ad::BatchNormState bn;
        bn.gamma = make_param(prefix + ".bn.gamma", {width});
        bn.beta = make_param(prefix + ".bn.beta", {width});
        std::fill(bn.gamma.values().begin(), bn.gamma.values().end(), 1.0);
        bn.running_mean.assign(width, 0.0);
        bn.running_var.assign(width, 1.0);
        layer.bn = std::move(bn);
      }
      backbone_.push_back(std::move(layer));
      fan_in = width;
    }

    if (!concat) {
      const std::size_t d_in = fan_in, d_out = arch_.hidden.back();
      const std::size_t m = arch_.embed_dim, mh = arch_.modulation_hidden;
      cond_w_ = make_param("head.weight", {d_out, d_in});
      cond_b_ = make_param("head.bias", {d_out});
      init_uniform(cond_w_, d_in, rng);
      init_uniform(cond_b_, d_in, rng);

      omega_ = make_param("time_embedding.frequency", {m, 1});
      phase_ = make_param("time_embedding.phase", {m});
      for (double& v : omega_.values()) v = rng.normal(0.0, kFrequencyScale);
      for (double& v : phase_.values()) v = rng.uniform(0.0, 2.0 * std::numbers::pi);
      phase_[0] = 0.0;

      mod1_w_ = make_param("modulation.0.weight", {mh, m});
      mod1_b_ = make_param("modulation.0.bias", {mh});
      init_uniform(mod1_w_, m, rng);
      init_uniform(mod1_b_, m, rng);

      if (arch_.conditioning == Conditioning::lora) {
        const std::size_t r = arch_.lora_rank;
        mod2_w_ = make_param("modulation.1.weight", {r, mh});
        mod2_b_ = make_param("modulation.1.bias", {r});
        init_uniform(mod2_w_, mh, rng);
        init_uniform(mod2_b_, mh, rng);
        lora_u_ = make_param("lora.U", {d_out, r});  // zero: starts time-homogeneous
        lora_v_ = make_param("lora.V", {r, d_in});
        const double sd = 1.0 / std::sqrt(static_cast<double>(d_in));
        for (double& v : lora_v_.values()) v = rng.normal(0.0, sd);
      } else {
        // Zero-initialised generators give gamma = 0, beta = 0: the identity modulation.
        mod2_w_ = make_param("film.gamma.weight", {d_out, mh});
        mod2_b_ = make_param("film.gamma.bias", {d_out});
        film_beta_w_ = make_param("film.beta.weight", {d_out, mh});
        film_beta_b_ = make_param("film.beta.bias", {d_out});
      }
      fan_in = d_out;
    }

    out_w_ = make_param("output.weight", {1, fan_in});
    out_b_ = make_param("output.bias", {1});
    init_uniform(out_w_, fan_in, rng);
    init_uniform(out_b_, fan_in, rng);
  }

  ad::Tensor run_backbone(ad::Graph& g, ad::Tensor h, ForwardMode mode) const {
    for (auto& layer : backbone_) {
      h = ad::affine(g, layer.weight, layer.bias, h);
      if (layer.bn) h = ad::batch_norm(g, h, *layer.bn, mode.training);
      h = ad::elementwise(g, arch_.activation, h);
      if (mode.training && arch_.dropout > 0.0) {
        if (mode.rng == nullptr) throw ContractError("dropout in training mode needs an Rng");
        h = ad::dropout(g, h, arch_.dropout, *mode.rng, true);
      }
    }
    return h;
  }

  // Spread of initial embedding frequencies, in units of scaled time.
  static constexpr double kFrequencyScale = 3.0;

  Architecture arch_;
  std::vector<NamedParameter> params_;
  // Batch-norm running statistics change in training mode only.
  mutable std::vector<DenseLayer> backbone_;
  ad::Tensor cond_w_, cond_b_;
  ad::Tensor omega_, phase_;
  ad::Tensor mod1_w_, mod1_b_, mod2_w_, mod2_b_;
  ad::Tensor film_beta_w_, film_beta_b_;
  ad::Tensor lora_u_, lora_v_;
  ad::Tensor out_w_, out_b_;
};

// ---------------------------------------------------------------------------
// Evaluation helpers (inference mode, no tape)

inline double log_hazard(const HazardModel& model, std::span<const double> x, double t) {
  if (x.size() != model.input_dim()) {
    throw ShapeError("covariate vector has dimension " + std::to_string(x.size()) + ", model expects " +
                     std::to_string(model.input_dim()));
  }
  ad::Graph g = ad::Graph::inference();
  const double times[1] = {t};
  return model.forward(g, x, 1, times, 1).value();
}

inline double hazard(const HazardModel& model, std::span<const double> x, double t) {
  return std::exp(log_hazard(model, x, t));
}

/// f(x, t * tau_k) for every node of the rule, with the backbone evaluated once.
inline std::vector<double> log_hazard_at_nodes(const HazardModel& model, std::span<const double> x, double t,
                                               const QuadratureRule& rule) {
  if (x.size() != model.input_dim()) {
    throw ShapeError("covariate vector has dimension " + std::to_string(x.size()) + ", model expects " +
                     std::to_string(model.input_dim()));
  }
  std::vector<double> times(rule.order);
  for (std::size_t k = 0; k < rule.order; ++k) times[k] = t * rule.unit_nodes[k];
  ad::Graph g = ad::Graph::inference();
  const ad::Tensor out = model.forward(g, x, 1, times, rule.order);
  const auto logs = out.values();
  return {logs.begin(), logs.end()};
}

inline double cumulative_hazard(const HazardModel& model, const QuadratureRule& rule, std::span<const double> x,
                                double t) {
  if (t == 0.0) return 0.0;
  const auto logs = log_hazard_at_nodes(model, x, t, rule);
  double acc = 0.0;
  for (std::size_t k = 0; k < rule.order; ++k) {
    const double h = std::exp(logs[k]);
    if (!std::isfinite(h)) throw NonFiniteHazardError(t * rule.unit_nodes[k], h);
    acc += rule.weights[k] * h;
  }
  return 0.5 * t * acc;
}

inline double survival(const HazardModel& model, const QuadratureRule& rule, std::span<const double> x, double t) {
  return std::exp(-cumulative_hazard(model, rule, x, t));
}

struct CurvePoint {
  double t = 0.0;
  double hazard = 0.0;
  double cumhaz = 0.0;
  double survival = 1.0;
};

/// Per-subject curves on a shared grid: hazard, cumulative hazard and survival.
/// Row i of each matrix is subject i; column g is grid point g.
struct CurveTable {
  std::vector<double> grid;
  std::size_t subjects = 0;
  std::vector<double> hazard;
  std::vector<double> cumhaz;
  std::vector<double> survival;

  double survival_at(std::size_t i, std::size_t gidx) const { return survival[i * grid.size() + gidx]; }
};

inline void require_ascending_grid(std::span<const double> grid) {
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 0.0) || !std::isfinite(grid[i])) throw ContractError("grid times must be finite and >= 0");
    if (i > 0 && grid[i] < grid[i - 1]) throw ContractError("grid must be ascending");
  }
}

/// Curves for `rows` subjects. Each grid point t contributes K + 1 evaluation
/// times (t itself and the nodes t * tau_k), so Lambda at every grid point is
/// exactly the quadrature estimate returned by cumulative_hazard().
inline CurveTable predict_curves(const HazardModel& model, const QuadratureRule& rule, std::span<const double> x,
                                 std::size_t rows, std::span<const double> grid, std::size_t chunk = 8) {
  require_ascending_grid(grid);
  const std::size_t d = model.input_dim();
  if (x.size() != rows * d) {
    throw ShapeError("expected " + std::to_string(rows) + " covariate rows of dimension " + std::to_string(d));
  }
  const std::size_t G = grid.size(), K = rule.order, per = G * (K + 1);
  CurveTable table;
  table.grid.assign(grid.begin(), grid.end());
  table.subjects = rows;
  table.hazard.resize(rows * G);
  table.cumhaz.resize(rows * G);
  table.survival.resize(rows * G);

  std::vector<double> times;
  for (std::size_t start = 0; start < rows; start += chunk) {
    const std::size_t n = std::min(chunk, rows - start);
    times.assign(n * per, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t gi = 0; gi < G; ++gi) {
        double* slot = times.data() + i * per + gi * (K + 1);
        slot[0] = grid[gi];
        for (std::size_t k = 0; k < K; ++k) slot[k + 1] = grid[gi] * rule.unit_nodes[k];
      }
    ad::Graph g = ad::Graph::inference();
    const ad::Tensor out = model.forward(g, x.subspan(start * d, n * d), n, times, per);
    const auto logs = out.values();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t gi = 0; gi < G; ++gi) {
        const double* slot = logs.data() + i * per + gi * (K + 1);
        const double t = grid[gi];
        double acc = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
          const double h = std::exp(slot[k + 1]);
          if (!std::isfinite(h)) throw NonFiniteHazardError(t * rule.unit_nodes[k], h);
          acc += rule.weights[k] * h;
        }
        const double cum = t == 0.0 ? 0.0 : 0.5 * t * acc;
        const std::size_t idx = (start + i) * G + gi;
        table.hazard[idx] = std::exp(slot[0]);
        table.cumhaz[idx] = cum;
        table.survival[idx] = std::exp(-cum);
      }
  }
  return table;
}

inline std::vector<CurvePoint> hazard_curve(const HazardModel& model, const QuadratureRule& rule,
                                            std::span<const double> x, std::span<const double> grid) {
  const CurveTable table = predict_curves(model, rule, x, 1, grid);
  std::vector<CurvePoint> out(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out[i] = {grid[i], table.hazard[i], table.cumhaz[i], table.survival[i]};
  }
  return out;
}

}  // namespace qsurv
