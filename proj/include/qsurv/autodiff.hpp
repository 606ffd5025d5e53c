// SPDX-License-Identifier: Apache-2.0
#pragma once

/// Small reverse-mode differentiation core.
///
/// Tensors are shared handles onto row-major storage; copying a Tensor aliases
/// the same values. A Graph records every op whose inputs need gradients and
/// replays the recorded backward rules in reverse order. Graphs are rebuilt for
/// every minibatch because quadrature node times depend on the batch.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <numbers>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "qsurv/errors.hpp"
#include "qsurv/random.hpp"

namespace qsurv::ad {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

inline std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

struct TensorData {
  Shape shape;
  std::vector<double> values;
  std::vector<double> grad;  // empty until a gradient arrives
  bool requires_grad = false;
};

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    Tensor t;
    t.data_ = std::make_shared<TensorData>();
    t.data_->values.assign(shape_size(shape), 0.0);
    t.data_->shape = std::move(shape);
    t.data_->requires_grad = requires_grad;
    return t;
  }

  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false) {
    if (values.size() != shape_size(shape)) {
      throw ShapeError("tensor of shape " + shape_str(shape) + " cannot hold " +
                       std::to_string(values.size()) + " values");
    }
    Tensor t;
    t.data_ = std::make_shared<TensorData>();
    t.data_->shape = std::move(shape);
    t.data_->values = std::move(values);
    t.data_->requires_grad = requires_grad;
    return t;
  }

  static Tensor scalar(double v, bool requires_grad = false) { return from({}, {v}, requires_grad); }

  bool defined() const noexcept { return static_cast<bool>(data_); }
  const Shape& shape() const { return data_->shape; }
  std::size_t rank() const { return data_->shape.size(); }
  std::size_t size() const { return data_->values.size(); }
  std::size_t rows() const { return rank() == 2 ? shape()[0] : 1; }
  std::size_t cols() const { return rank() == 0 ? 1 : shape().back(); }
  bool requires_grad() const { return data_->requires_grad; }
  void set_requires_grad(bool on) { data_->requires_grad = on; }

  std::span<double> values() { return data_->values; }
  std::span<const double> values() const { return data_->values; }
  double value(std::size_t i = 0) const { return data_->values[i]; }
  double& operator[](std::size_t i) { return data_->values[i]; }
  double operator[](std::size_t i) const { return data_->values[i]; }

  bool has_grad() const { return !data_->grad.empty(); }
  std::span<double> grad() {
    ensure_grad();
    return data_->grad;
  }
  std::span<const double> grad() const { return data_->grad; }
  void ensure_grad() {
    if (data_->grad.empty()) data_->grad.assign(data_->values.size(), 0.0);
  }
  void zero_grad() { data_->grad.clear(); }

  /// Deep copy of values; the copy has no gradient.
  Tensor clone() const { return from(shape(), data_->values, requires_grad()); }

  bool same(const Tensor& other) const { return data_ == other.data_; }

 private:
  std::shared_ptr<TensorData> data_;
};

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using VectorMap = Eigen::Map<Eigen::VectorXd>;
using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;

inline ConstMatrixMap as_matrix(const Tensor& t) {
  return ConstMatrixMap(t.values().data(), static_cast<Eigen::Index>(t.rows()),
                        static_cast<Eigen::Index>(t.cols()));
}
inline MatrixMap as_matrix(Tensor& t) {
  return MatrixMap(t.values().data(), static_cast<Eigen::Index>(t.rows()),
                   static_cast<Eigen::Index>(t.cols()));
}
inline MatrixMap grad_matrix(Tensor& t) {
  auto g = t.grad();
  return MatrixMap(g.data(), static_cast<Eigen::Index>(t.rows()),
                   static_cast<Eigen::Index>(t.cols()));
}

/// Record of differentiable ops for one forward pass.
class Graph {
 public:
  /// A graph built with recording off evaluates ops but keeps no tape.
  explicit Graph(bool recording = true) : recording_(recording) {}

  static Graph inference() { return Graph(false); }

  bool recording() const noexcept { return recording_; }
  std::size_t size() const noexcept { return ops_.size(); }

  /// True when an op over these inputs must be recorded.
  bool wants(std::initializer_list<const Tensor*> inputs) const {
    if (!recording_) return false;
    for (const Tensor* t : inputs) {
      if (t != nullptr && t->defined() && t->requires_grad()) return true;
    }
    return false;
  }

  void record(Tensor output, std::function<void(Tensor&)> backward_rule) {
    ops_.push_back(Op{std::move(output), std::move(backward_rule)});
  }

  /// Seed d(loss)/d(loss) = 1 and run every recorded rule once, newest first.
  /// Leaf gradients accumulate across calls until zero_grad().
  /// Returns the number of ops visited.
  std::size_t backward(Tensor& loss) {
    if (loss.size() != 1) {
      throw ContractError("backward requires a scalar loss, got shape " + shape_str(loss.shape()));
    }
    if (!loss.requires_grad()) return 0;
    loss.ensure_grad();
    loss.grad()[0] += 1.0;
    std::size_t visited = 0;
    for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) {
      ++visited;
      if (!it->output.has_grad()) continue;  // no path to the loss
      it->backward(it->output);
    }
    return visited;
  }

 private:
  struct Op {
    Tensor output;
    std::function<void(Tensor&)> backward;
  };
  bool recording_;
  std::vector<Op> ops_;
};

// ---------------------------------------------------------------------------
// Dense maps

/// Row-wise h W^T + b: W is [out x in], b is [out] (or undefined), h is [batch x in].
inline Tensor affine(Graph& g, const Tensor& w, const Tensor& b, const Tensor& h) {
  if (w.rank() != 2 || h.rank() != 2 || w.shape()[1] != h.shape()[1] ||
      (b.defined() && (b.size() != w.shape()[0]))) {
    throw ShapeError("affine: incompatible shapes W" + shape_str(w.shape()) + " b" +
                     (b.defined() ? shape_str(b.shape()) : std::string("[]")) + " h" +
                     shape_str(h.shape()));
  }
  const std::size_t batch = h.shape()[0];
  const std::size_t out = w.shape()[0];
  Tensor y = Tensor::zeros({batch, out});
  auto ym = as_matrix(y);
  ym.noalias() = as_matrix(h) * as_matrix(w).transpose();
  if (b.defined()) ym.rowwise() += ConstVectorMap(b.values().data(), static_cast<Eigen::Index>(out)).transpose();

  if (g.wants({&w, &b, &h})) {
    y.set_requires_grad(true);
    g.record(y, [w = Tensor(w), b = Tensor(b), h = Tensor(h)](Tensor& out_t) mutable {
      auto gy = as_matrix(std::as_const(out_t));
      const ConstMatrixMap dy(out_t.grad().data(), gy.rows(), gy.cols());
      if (h.requires_grad()) grad_matrix(h).noalias() += dy * as_matrix(std::as_const(w));
      if (w.requires_grad()) grad_matrix(w).noalias() += dy.transpose() * as_matrix(std::as_const(h));
      if (b.defined() && b.requires_grad()) {
        auto gb = b.grad();
        VectorMap(gb.data(), static_cast<Eigen::Index>(gb.size())) += dy.colwise().sum().transpose();
      }
    });
  }
  return y;
}

/// h W^T without bias.
inline Tensor linear(Graph& g, const Tensor& w, const Tensor& h) { return affine(g, w, Tensor{}, h); }

// ---------------------------------------------------------------------------
// Elementwise

enum class Activation { tanh, softplus, gelu, sigmoid, exp, relu };

inline std::string to_string(Activation a) {
  switch (a) {
    case Activation::tanh: return "tanh";
    case Activation::softplus: return "softplus";
    case Activation::gelu: return "gelu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::exp: return "exp";
    case Activation::relu: return "relu";
  }
  return "?";
}

inline Activation activation_from_string(const std::string& s) {
  for (Activation a : {Activation::tanh, Activation::softplus, Activation::gelu, Activation::sigmoid,
                       Activation::exp, Activation::relu}) {
    if (to_string(a) == s) return a;
  }
  throw ConfigError("unknown activation '" + s + "'");
}

namespace detail {

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double apply(Activation kind, double x) {
  switch (kind) {
    case Activation::tanh: return std::tanh(x);
    case Activation::softplus: return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
    case Activation::gelu: return 0.5 * x * std::erfc(-x / std::numbers::sqrt2);
    case Activation::sigmoid: return sigmoid(x);
    case Activation::exp: return std::exp(x);
    case Activation::relu: return x > 0.0 ? x : 0.0;
  }
  return x;
}

// Derivative given input x and output y.
inline double derivative(Activation kind, double x, double y) {
  switch (kind) {
    case Activation::tanh: return 1.0 - y * y;
    case Activation::softplus: return sigmoid(x);
    case Activation::gelu:
      return 0.5 * std::erfc(-x / std::numbers::sqrt2) +
             x * std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
    case Activation::sigmoid: return y * (1.0 - y);
    case Activation::exp: return y;
    case Activation::relu: return x > 0.0 ? 1.0 : 0.0;
  }
  return 1.0;
}

}  // namespace detail

inline Tensor elementwise(Graph& g, Activation kind, const Tensor& x) {
  Tensor y = Tensor::zeros(x.shape());
  auto xv = x.values();
  auto yv = y.values();
  for (std::size_t i = 0; i < xv.size(); ++i) {
    yv[i] = detail::apply(kind, xv[i]);
    if (!std::isfinite(yv[i])) {
      std::ostringstream os;
      os.precision(17);
      os << to_string(kind) << " produced a non-finite value at input " << xv[i];
      throw NumericDomainError(os.str());
    }
  }
  if (g.wants({&x})) {
    y.set_requires_grad(true);
    g.record(y, [kind, x = Tensor(x)](Tensor& out) mutable {
      auto gx = x.grad();
      auto xv2 = std::as_const(x).values();
      auto yv2 = std::as_const(out).values();
      auto gy = std::as_const(out).grad();
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gy[i] * detail::derivative(kind, xv2[i], yv2[i]);
    });
  }
  return y;
}

namespace detail {

inline void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shapes " + shape_str(a.shape()) + " and " +
                     shape_str(b.shape()) + " differ");
  }
}

}  // namespace detail

inline Tensor add(Graph& g, const Tensor& a, const Tensor& b) {
  detail::require_same_shape("add", a, b);
  Tensor y = Tensor::zeros(a.shape());
  auto av = a.values(), bv = b.values();
  auto yv = y.values();
  for (std::size_t i = 0; i < yv.size(); ++i) yv[i] = av[i] + bv[i];
  if (g.wants({&a, &b})) {
    y.set_requires_grad(true);
    g.record(y, [a = Tensor(a), b = Tensor(b)](Tensor& out) mutable {
      auto gy = std::as_const(out).grad();
      if (a.requires_grad()) {
        auto ga = a.grad();
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gy[i];
      }
      if (b.requires_grad()) {
        auto gb = b.grad();
        for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += gy[i];
      }
    });
  }
  return y;
}

/// Elementwise (Hadamard) product.
inline Tensor mul(Graph& g, const Tensor& a, const Tensor& b) {
  detail::require_same_shape("mul", a, b);
  Tensor y = Tensor::zeros(a.shape());
  auto av = a.values(), bv = b.values();
  auto yv = y.values();
  for (std::size_t i = 0; i < yv.size(); ++i) yv[i] = av[i] * bv[i];
  if (g.wants({&a, &b})) {
    y.set_requires_grad(true);
    g.record(y, [a = Tensor(a), b = Tensor(b)](Tensor& out) mutable {
      auto gy = std::as_const(out).grad();
      auto av2 = std::as_const(a).values(), bv2 = std::as_const(b).values();
      if (a.requires_grad()) {
        auto ga = a.grad();
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gy[i] * bv2[i];
      }
      if (b.requires_grad()) {
        auto gb = b.grad();
        for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += gy[i] * av2[i];
      }
    });
  }
  return y;
}

/// Multiply every element by a constant. The constants are not differentiated.
inline Tensor scale(Graph& g, const Tensor& x, std::span<const double> factors) {
  if (factors.size() != x.size()) {
    throw ShapeError("scale: " + std::to_string(factors.size()) + " factors for tensor " +
                     shape_str(x.shape()));
  }
  Tensor y = Tensor::zeros(x.shape());
  auto xv = x.values();
  auto yv = y.values();
  for (std::size_t i = 0; i < yv.size(); ++i) yv[i] = xv[i] * factors[i];
  if (g.wants({&x})) {
    y.set_requires_grad(true);
    std::vector<double> f(factors.begin(), factors.end());
    g.record(y, [x = Tensor(x), f = std::move(f)](Tensor& out) mutable {
      auto gy = std::as_const(out).grad();
      auto gx = x.grad();
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gy[i] * f[i];
    });
  }
  return y;
}

// ---------------------------------------------------------------------------
// Structural

/// [rows x c] -> [rows*times x c]; row i is copied to rows i*times .. i*times+times-1.
/// The backward rule sums the copies, so a cached row receives every node's gradient.
inline Tensor repeat_rows(Graph& g, const Tensor& x, std::size_t times) {
  if (x.rank() != 2) throw ShapeError("repeat_rows expects a matrix, got " + shape_str(x.shape()));
  const std::size_t rows = x.shape()[0], cols = x.shape()[1];
  Tensor y = Tensor::zeros({rows * times, cols});
  auto xv = x.values();
  auto yv = y.values();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t k = 0; k < times; ++k) {
      std::copy_n(xv.begin() + static_cast<std::ptrdiff_t>(r * cols), cols,
                  yv.begin() + static_cast<std::ptrdiff_t>((r * times + k) * cols));
    }
  }
  if (g.wants({&x})) {
    y.set_requires_grad(true);
    g.record(y, [x = Tensor(x), rows, cols, times](Tensor& out) mutable {
      auto gy = std::as_const(out).grad();
      auto gx = x.grad();
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t k = 0; k < times; ++k) {
          const double* src = gy.data() + (r * times + k) * cols;
          double* dst = gx.data() + r * cols;
          for (std::size_t c = 0; c < cols; ++c) dst[c] += src[c];
        }
      }
    });
  }
  return y;
}

/// Column concatenation of two matrices with equal row counts.
inline Tensor concat_cols(Graph& g, const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.shape()[0] != b.shape()[0]) {
    throw ShapeError("concat_cols: shapes " + shape_str(a.shape()) + " and " + shape_str(b.shape()));
  }
  const std::size_t rows = a.shape()[0], ca = a.shape()[1], cb = b.shape()[1];
  Tensor y = Tensor::zeros({rows, ca + cb});
  auto av = a.values(), bv = b.values();
  auto yv = y.values();
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(av.data() + r * ca, ca, yv.data() + r * (ca + cb));
    std::copy_n(bv.data() + r * cb, cb, yv.data() + r * (ca + cb) + ca);
  }
  if (g.wants({&a, &b})) {
    y.set_requires_grad(true);
    g.record(y, [a = Tensor(a), b = Tensor(b), rows, ca, cb](Tensor& out) mutable {
      auto gy = std::as_const(out).grad();
      if (a.requires_grad()) {
        auto ga = a.grad();
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t c = 0; c < ca; ++c) ga[r * ca + c] += gy[r * (ca + cb) + c];
      }
      if (b.requires_grad()) {
        auto gb = b.grad();
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t c = 0; c < cb; ++c) gb[r * cb + c] += gy[r * (ca + cb) + ca + c];
      }
    });
  }
  return y;
}

/// Column 0 passes through; every other column goes through sin.
/// Applied to an affine map of time this is the periodic time embedding.
inline Tensor periodic(Graph& g, const Tensor& x) {
  if (x.rank() != 2) throw ShapeError("periodic expects a matrix, got " + shape_str(x.shape()));
  const std::size_t rows = x.shape()[0], cols = x.shape()[1];
  Tensor y = Tensor::zeros(x.shape());
  auto xv = x.values();
  auto yv = y.values();
  for (std::size_t r = 0; r < rows; ++r) {
    yv[r * cols] = xv[r * cols];
    for (std::size_t c = 1; c < cols; ++c) yv[r * cols + c] = std::sin(xv[r * cols + c]);
  }
  if (g.wants({&x})) {
    y.set_requires_grad(true);
    g.record(y, [x = Tensor(x), rows, cols](Tensor& out) mutable {
      auto gy = std::as_const(out).grad();
      auto gx = x.grad();
      auto xv2 = std::as_const(x).values();
      for (std::size_t r = 0; r < rows; ++r) {
        gx[r * cols] += gy[r * cols];
        for (std::size_t c = 1; c < cols; ++c) gx[r * cols + c] += gy[r * cols + c] * std::cos(xv2[r * cols + c]);
      }
    });
  }
  return y;
}

// ---------------------------------------------------------------------------
// Reductions

inline Tensor sum(Graph& g, const Tensor& x) {
  auto xv = x.values();
  Tensor y = Tensor::scalar(std::accumulate(xv.begin(), xv.end(), 0.0));
  if (g.wants({&x})) {
    y.set_requires_grad(true);
    g.record(y, [x = Tensor(x)](Tensor& out) mutable {
      const double gy = std::as_const(out).grad()[0];
      for (double& v : x.grad()) v += gy;
    });
  }
  return y;
}

/// sum_i c_i x_i with constant coefficients.
inline Tensor dot_const(Graph& g, const Tensor& x, std::span<const double> coefficients) {
  if (coefficients.size() != x.size()) {
    throw ShapeError("dot_const: " + std::to_string(coefficients.size()) + " coefficients for tensor " +
                     shape_str(x.shape()));
  }
  auto xv = x.values();
  double acc = 0.0;
  for (std::size_t i = 0; i < xv.size(); ++i) acc += coefficients[i] * xv[i];
  Tensor y = Tensor::scalar(acc);
  if (g.wants({&x})) {
    y.set_requires_grad(true);
    std::vector<double> c(coefficients.begin(), coefficients.end());
    g.record(y, [x = Tensor(x), c = std::move(c)](Tensor& out) mutable {
      const double gy = std::as_const(out).grad()[0];
      auto gx = x.grad();
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gy * c[i];
    });
  }
  return y;
}

// ---------------------------------------------------------------------------
// Regularisation layers

/// Inverted dropout; identity when not training or p == 0.
inline Tensor dropout(Graph& g, const Tensor& x, double p, Rng& rng, bool training) {
  if (!training || p <= 0.0) return x;
  std::vector<double> mask(x.size());
  const double keep = 1.0 / (1.0 - p);
  for (double& m : mask) m = rng.uniform() < p ? 0.0 : keep;
  return scale(g, x, mask);
}

struct BatchNormState {
  Tensor gamma;  // learnable [features]
  Tensor beta;   // learnable [features]
  std::vector<double> running_mean;
  std::vector<double> running_var;
  double momentum = 0.1;
  double eps = 1e-5;
};

/// Batch normalisation over rows. Training mode uses batch statistics and
/// updates the running averages; evaluation mode uses the running averages.
inline Tensor batch_norm(Graph& g, const Tensor& x, BatchNormState& state, bool training) {
  if (x.rank() != 2 || x.shape()[1] != state.gamma.size()) {
    throw ShapeError("batch_norm: input " + shape_str(x.shape()) + " vs " +
                     std::to_string(state.gamma.size()) + " features");
  }
  const std::size_t rows = x.shape()[0], cols = x.shape()[1];
  std::vector<double> mean(cols, 0.0), var(cols, 0.0);
  auto xv = x.values();
  if (training) {
    if (rows < 2) throw ContractError("batch_norm in training mode needs at least two rows");
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) mean[c] += xv[r * cols + c];
    for (double& m : mean) m /= static_cast<double>(rows);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) {
        const double d = xv[r * cols + c] - mean[c];
        var[c] += d * d;
      }
    for (std::size_t c = 0; c < cols; ++c) {
      const double biased = var[c] / static_cast<double>(rows);
      const double unbiased = var[c] / static_cast<double>(rows - 1);
      var[c] = biased;
      state.running_mean[c] = (1.0 - state.momentum) * state.running_mean[c] + state.momentum * mean[c];
      state.running_var[c] = (1.0 - state.momentum) * state.running_var[c] + state.momentum * unbiased;
    }
  } else {
    mean = state.running_mean;
    var = state.running_var;
  }
  std::vector<double> inv_std(cols);
  for (std::size_t c = 0; c < cols; ++c) inv_std[c] = 1.0 / std::sqrt(var[c] + state.eps);

  Tensor xhat = Tensor::zeros(x.shape());
  Tensor y = Tensor::zeros(x.shape());
  auto hv = xhat.values();
  auto yv = y.values();
  auto gam = state.gamma.values(), bet = state.beta.values();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      const std::size_t i = r * cols + c;
      hv[i] = (xv[i] - mean[c]) * inv_std[c];
      yv[i] = gam[c] * hv[i] + bet[c];
    }

  if (g.wants({&x, &state.gamma, &state.beta})) {
    y.set_requires_grad(true);
    g.record(y, [x = Tensor(x), xhat, gamma = state.gamma, beta = state.beta, inv_std, rows, cols,
                 training](Tensor& out) mutable {
      auto gy = std::as_const(out).grad();
      auto hv2 = std::as_const(xhat).values();
      auto gam2 = std::as_const(gamma).values();
      std::vector<double> sum_gy(cols, 0.0), sum_gy_h(cols, 0.0);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) {
          sum_gy[c] += gy[r * cols + c];
          sum_gy_h[c] += gy[r * cols + c] * hv2[r * cols + c];
        }
      if (gamma.requires_grad()) {
        auto gg = gamma.grad();
        for (std::size_t c = 0; c < cols; ++c) gg[c] += sum_gy_h[c];
      }
      if (beta.requires_grad()) {
        auto gb = beta.grad();
        for (std::size_t c = 0; c < cols; ++c) gb[c] += sum_gy[c];
      }
      if (x.requires_grad()) {
        auto gx = x.grad();
        const double n = static_cast<double>(rows);
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t c = 0; c < cols; ++c) {
            const std::size_t i = r * cols + c;
            if (training) {
              gx[i] += gam2[c] * inv_std[c] * (gy[i] - sum_gy[c] / n - hv2[i] * sum_gy_h[c] / n);
            } else {
              gx[i] += gam2[c] * inv_std[c] * gy[i];
            }
          }
      }
    });
  }
  return y;
}

/// Throws if any value is non-finite.
inline void require_finite(const Tensor& t, const std::string& what) {
  for (double v : t.values()) {
    if (!std::isfinite(v)) throw NumericDomainError(what + " contains a non-finite value");
  }
}

}  // namespace qsurv::ad
