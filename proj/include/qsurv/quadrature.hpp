// SPDX-License-Identifier: Apache-2.0
#pragma once

/// Gauss-Legendre rules and the quadrature estimate of the cumulative hazard.
///
/// A K-point rule on [-1, 1] places its nodes at the roots of the Legendre
/// polynomial P_K and is exact for polynomials of degree <= 2K-1. For the
/// cumulative hazard over a subject-specific interval [0, t] the nodes are
/// mapped to tau_k = (xi_k + 1) / 2 in (0, 1) and
///
///     Lambda(t) ~= (t / 2) * sum_k w_k * hazard(t * tau_k).

#include <array>
#include <cmath>
#include <cstddef>
#include <memory>
#include <mutex>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "qsurv/errors.hpp"

namespace qsurv {

inline constexpr std::size_t kMaxQuadratureOrder = 64;

struct QuadratureRule {
  std::size_t order = 0;
  std::vector<double> canonical_nodes;  // ascending, in (-1, 1)
  std::vector<double> unit_nodes;       // (xi + 1) / 2, in (0, 1)
  std::vector<double> weights;          // positive, sum to 2
};

struct LegendreValue {
  double value = 0.0;
  double derivative = 0.0;
};

/// P_K(x) and P_K'(x) by the three-term recurrence
/// (n+1) P_{n+1} = (2n+1) x P_n - n P_{n-1}.
inline LegendreValue legendre_eval(std::size_t order, double x) {
  if (order == 0) return {1.0, 0.0};
  double p_prev = 1.0;  // P_0
  double p = x;         // P_1
  for (std::size_t n = 1; n < order; ++n) {
    const double nn = static_cast<double>(n);
    const double p_next = ((2.0 * nn + 1.0) * x * p - nn * p_prev) / (nn + 1.0);
    p_prev = p;
    p = p_next;
  }
  const double k = static_cast<double>(order);
  double dp = 0.0;
  if (x == 1.0 || x == -1.0) {
    // P_K'(+-1) = (+-1)^{K+1} K (K+1) / 2; the general formula divides by zero.
    const double sign = (order % 2 == 1 || x > 0.0) ? 1.0 : -1.0;
    dp = sign * k * (k + 1.0) / 2.0;
  } else {
    dp = k * (x * p - p_prev) / (x * x - 1.0);
  }
  return {p, dp};
}

/// Build a K-point rule. Nodes are Newton-refined from the Chebyshev-angle guess
/// cos(pi (k - 1/4) / (K + 1/2)).
inline QuadratureRule build_rule(std::size_t order) {
  if (order == 0 || order > kMaxQuadratureOrder) {
    throw InvalidOrderError("quadrature order must be in [1, " +
                            std::to_string(kMaxQuadratureOrder) + "], got " +
                            std::to_string(order));
  }
  QuadratureRule rule;
  rule.order = order;
  rule.canonical_nodes.resize(order);
  rule.unit_nodes.resize(order);
  rule.weights.resize(order);

  const double k_half = static_cast<double>(order) + 0.5;
  // Roots come out descending in k; store them ascending.
  for (std::size_t k = 1; k <= order; ++k) {
    double x = std::cos(std::numbers::pi * (static_cast<double>(k) - 0.25) / k_half);
    for (int iter = 0; iter < 100; ++iter) {
      const LegendreValue lv = legendre_eval(order, x);
      const double dx = lv.value / lv.derivative;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    const LegendreValue lv = legendre_eval(order, x);
    const std::size_t idx = order - k;
    rule.canonical_nodes[idx] = x;
    rule.weights[idx] = 2.0 / ((1.0 - x * x) * lv.derivative * lv.derivative);
  }
  // Enforce exact mirror symmetry; Newton leaves the pair a few ulps apart.
  for (std::size_t i = 0; i < order / 2; ++i) {
    const std::size_t j = order - 1 - i;
    const double node = 0.5 * (rule.canonical_nodes[j] - rule.canonical_nodes[i]);
    const double weight = 0.5 * (rule.weights[i] + rule.weights[j]);
    rule.canonical_nodes[i] = -node;
    rule.canonical_nodes[j] = node;
    rule.weights[i] = rule.weights[j] = weight;
  }
  if (order % 2 == 1) rule.canonical_nodes[order / 2] = 0.0;
  for (std::size_t i = 0; i < order; ++i) {
    rule.unit_nodes[i] = 0.5 * (rule.canonical_nodes[i] + 1.0);
  }
  return rule;
}

/// Process-wide cache: each order is built once and then shared read-only.
inline const QuadratureRule& gauss_legendre(std::size_t order) {
  if (order == 0 || order > kMaxQuadratureOrder) {
    throw InvalidOrderError("quadrature order must be in [1, " +
                            std::to_string(kMaxQuadratureOrder) + "], got " +
                            std::to_string(order));
  }
  static std::array<std::unique_ptr<const QuadratureRule>, kMaxQuadratureOrder + 1> cache;
  static std::mutex mutex;
  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[order];
  if (!slot) slot = std::make_unique<const QuadratureRule>(build_rule(order));
  return *slot;
}

/// Raised when the integrand is not finite at a quadrature node.
class NonFiniteHazardError : public NumericDomainError {
 public:
  NonFiniteHazardError(double node_time, double value)
      : NumericDomainError(describe(node_time, value)), node_time_(node_time) {}
  double node_time() const noexcept { return node_time_; }

 private:
  static std::string describe(double node_time, double value) {
    std::ostringstream os;
    os.precision(17);
    os << "hazard evaluated to " << value << " at node time " << node_time;
    return os.str();
  }
  double node_time_;
};

/// (t/2) * sum_k w_k * hazard_at(t * tau_k). Exactly zero at t = 0.
template <typename HazardFn>
double cumulative_hazard(const QuadratureRule& rule, HazardFn&& hazard_at, double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) {
    throw ContractError("cumulative_hazard requires a finite t >= 0");
  }
  if (t == 0.0) return 0.0;
  double acc = 0.0;
  for (std::size_t k = 0; k < rule.order; ++k) {
    const double s = t * rule.unit_nodes[k];
    const double h = hazard_at(s);
    if (!std::isfinite(h)) throw NonFiniteHazardError(s, h);
    acc += rule.weights[k] * h;
  }
  return 0.5 * t * acc;
}

/// Error bound on the K-point estimate over [0, t] given |hazard^{(2K)}| <= deriv_max:
///   t^{2K+1} (K!)^4 / ((2K+1) ((2K)!)^3) * deriv_max.
/// Evaluated in log space; the factorials overflow a double well before K = 64.
inline double error_bound(const QuadratureRule& rule, double t, double deriv_max) {
  if (t <= 0.0 || deriv_max <= 0.0) return 0.0;
  const double k = static_cast<double>(rule.order);
  const double log_coef = (2.0 * k + 1.0) * std::log(t) + 4.0 * std::lgamma(k + 1.0) -
                          std::log(2.0 * k + 1.0) - 3.0 * std::lgamma(2.0 * k + 1.0);
  return std::exp(log_coef + std::log(deriv_max));
}

}  // namespace qsurv
