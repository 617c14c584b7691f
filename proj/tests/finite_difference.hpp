#pragma once

// Central finite differences of L(X) = sum(G .* whitened(X)), the oracle for
// the whitening backward pass.

#include <algorithm>
#include <cmath>

#include "whitekit/whitening.hpp"

namespace whitekit::testing {

inline double weighted_output(const Matrix& x, const WhiteningConfig& cfg, const Matrix& weights) {
  const Matrix y = whiten(x, cfg).whitened;
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += y.data()[i] * weights.data()[i];
  return s;
}

/// Step 1e-5 * (1 + |x_ij|) per entry.
inline Matrix finite_difference_gradient(const Matrix& x, const WhiteningConfig& cfg,
                                         const Matrix& weights) {
  Matrix grad(x.rows(), x.cols());
  Matrix probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double x0 = x.data()[i];
    const double h = 1e-5 * (1.0 + std::abs(x0));
    probe.data()[i] = x0 + h;
    const double up = weighted_output(probe, cfg, weights);
    probe.data()[i] = x0 - h;
    const double down = weighted_output(probe, cfg, weights);
    probe.data()[i] = x0;
    grad.data()[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

/// max |a - b| / max(max |a|, max |b|), or the plain difference when both vanish.
inline double relative_error(const Matrix& a, const Matrix& b) {
  const double diff = max_abs_diff(a, b);
  const double scale = std::max(max_abs(a), max_abs(b));
  return scale > 0.0 ? diff / scale : diff;
}

}  // namespace whitekit::testing
