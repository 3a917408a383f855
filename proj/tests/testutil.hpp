#pragma once

// Shared test-only helpers: finite-difference gradient checking against the
// analytic backward passes.

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "gazerisk/tensor.hpp"

namespace gazerisk::testutil {

/// Central finite difference of a scalar loss w.r.t. one buffer entry.
inline double fd_derivative(double* slot, const std::function<double()>& loss,
                            double h = 1e-5) {
  const double orig = *slot;
  *slot = orig + h;
  const double lp = loss();
  *slot = orig - h;
  const double lm = loss();
  *slot = orig;
  return (lp - lm) / (2.0 * h);
}

/// Relative error with an absolute floor so near-zero gradients do not blow
/// up the ratio.
inline double rel_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 0.01});
  return std::abs(analytic - numeric) / denom;
}

/// Max relative error between the accumulated analytic gradient of `param`
/// and finite differences of `loss` over every entry.
inline double max_grad_rel_error(Parameter& param, const std::function<double()>& loss,
                                 double h = 1e-5) {
  double worst = 0.0;
  for (std::size_t i = 0; i < param.value.size(); ++i) {
    const double numeric = fd_derivative(&param.value.data[i], loss, h);
    worst = std::max(worst, rel_error(param.grad[i], numeric));
  }
  return worst;
}

/// Same check for a plain buffer whose analytic gradient was computed
/// separately (e.g. layer input gradients).
inline double max_buffer_rel_error(std::vector<double>& buffer,
                                   std::span<const double> analytic,
                                   const std::function<double()>& loss,
                                   double h = 1e-5) {
  double worst = 0.0;
  for (std::size_t i = 0; i < buffer.size(); ++i) {
    const double numeric = fd_derivative(&buffer[i], loss, h);
    worst = std::max(worst, rel_error(analytic[i], numeric));
  }
  return worst;
}

}  // namespace gazerisk::testutil
