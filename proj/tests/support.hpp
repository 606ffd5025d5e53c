// SPDX-License-Identifier: Apache-2.0
#pragma once

// Shared helpers for the test binaries.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "qsurv/autodiff.hpp"
#include "qsurv/checkpoint.hpp"

namespace qsurv::test_support {

struct GradientMismatch {
  double worst_relative = 0.0;
  std::string worst_name;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

/// Relative difference with a small absolute floor so that gradients that are
/// zero up to rounding do not divide by zero.
inline double relative_difference(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Compare analytic gradients of `loss` (which must build a fresh graph each
/// call and return the scalar loss tensor) against central differences.
inline GradientMismatch check_gradients(std::vector<NamedParameter>& params,
                                        const std::function<ad::Tensor(ad::Graph&)>& loss, double step = 1e-5) {
  for (auto& p : params) p.tensor.zero_grad();
  {
    ad::Graph g;
    ad::Tensor l = loss(g);
    g.backward(l);
  }
  GradientMismatch out;
  for (auto& p : params) {
    auto values = p.tensor.values();
    const std::vector<double> analytic(p.tensor.grad().begin(), p.tensor.grad().end());
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double orig = values[i];
      values[i] = orig + step;
      ad::Graph g1 = ad::Graph::inference();
      const double up = loss(g1).value();
      values[i] = orig - step;
      ad::Graph g2 = ad::Graph::inference();
      const double down = loss(g2).value();
      values[i] = orig;
      const double numeric = (up - down) / (2.0 * step);
      const double rel = relative_difference(analytic[i], numeric);
      if (rel > out.worst_relative) out = {rel, p.name, i, analytic[i], numeric};
    }
  }
  return out;
}

}  // namespace qsurv::test_support
