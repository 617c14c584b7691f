#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "whitekit/error.hpp"
#include "whitekit/linalg.hpp"
#include "whitekit/matrix.hpp"

namespace whitekit {

enum class WhiteningMethod { Exact, Iterative };

struct WhiteningConfig {
  WhiteningMethod method = WhiteningMethod::Iterative;
  std::size_t iterations = 5;  // Newton steps, iterative method only
  double epsilon = 1e-5;       // added to the covariance diagonal
  std::optional<std::size_t> group_size;

  void validate(std::size_t features) const {
    if (iterations < 1) throw Error(ErrorKind::InvalidConfig, "iterations must be >= 1");
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
      throw Error(ErrorKind::InvalidConfig, "epsilon must be finite and >= 0");
    }
    if (group_size) {
      const std::size_t g = *group_size;
      if (g < 1 || g > features || features % g != 0) {
        throw Error(ErrorKind::BadGroupSize, "group size " + std::to_string(g) +
                                                 " does not divide feature count " +
                                                 std::to_string(features));
      }
    }
  }
};

/// Batch whitening output: whitened = (X - 1 mean^T) * transform.
struct WhiteningResult {
  Matrix whitened;
  std::vector<double> mean;
  Matrix transform;

  /// Applies the stored affine map to other rows (e.g. a test split).
  Matrix apply(const Matrix& x) const {
    if (x.cols() != mean.size()) {
      throw Error(ErrorKind::ShapeMismatch, "expected " + std::to_string(mean.size()) +
                                                " features, got " + std::to_string(x.cols()));
    }
    Matrix xc = x;
    for (std::size_t i = 0; i < xc.rows(); ++i) {
      auto row = xc.row(i);
      for (std::size_t j = 0; j < row.size(); ++j) row[j] -= mean[j];
    }
    return matmul(xc, transform);
  }
};

inline constexpr double kEigenvalueFloor = 1e-12;

namespace detail {

inline void require_batch(const Matrix& x) {
  if (x.rows() < 2) {
    throw Error(ErrorKind::DegenerateInput,
                "whitening needs at least 2 samples, got " + std::to_string(x.rows()));
  }
}

inline Matrix shrunk_covariance(const Matrix& xc, double epsilon) {
  Matrix s = covariance(xc);
  for (std::size_t i = 0; i < s.rows(); ++i) s(i, i) += epsilon;
  return s;
}

/**
 * P_0..P_T of the Newton recurrence P_{k+1} = (3 P_k - P_k^3 S_N) / 2 on the
 * trace-normalized covariance.
 *
 * Evaluated in coupled form: with Y_k = S_N P_k and T_k = (3I - P_k Y_k) / 2,
 * P_{k+1} = T_k P_k and Y_{k+1} = Y_k T_k. Both produce the same iterates in
 * exact arithmetic, but the direct form amplifies rounding errors once the
 * eigenvalue spread exceeds ~2.4 and diverges after convergence.
 */
inline std::vector<Matrix> newton_iterates(const Matrix& normalized, std::size_t iterations) {
  const std::size_t f = normalized.rows();
  std::vector<Matrix> p;
  p.reserve(iterations + 1);
  p.push_back(Matrix::identity(f));
  Matrix y = normalized;
  for (std::size_t k = 0; k < iterations; ++k) {
    Matrix t = matmul(p.back(), y) * -0.5;
    for (std::size_t i = 0; i < f; ++i) t(i, i) += 1.5;
    y = matmul(y, t);
    p.push_back(matmul(t, p.back()));
  }
  return p;
}

struct IterativeState {
  Centered centered;
  Matrix shrunk;      // covariance + eps I
  double trace_value;
  Matrix normalized;  // shrunk / trace
  std::vector<Matrix> iterates;
};

inline IterativeState iterative_forward(const Matrix& x, const WhiteningConfig& cfg) {
  require_batch(x);
  Centered c = center(x);
  Matrix s = shrunk_covariance(c.centered, cfg.epsilon);
  const double tr = trace(s);
  if (!(tr > 0.0)) {
    throw Error(ErrorKind::ZeroTrace,
                "covariance trace is zero; input is constant and epsilon is 0");
  }
  Matrix normalized = s * (1.0 / tr);
  auto iterates = newton_iterates(normalized, cfg.iterations);
  return {std::move(c), std::move(s), tr, std::move(normalized), std::move(iterates)};
}

}  // namespace detail

/**
 * Exact ZCA whitening: transform = D (Lambda + eps I)^{-1/2} D^T from the
 * eigendecomposition of the batch covariance (divisor n). Eigenvalues below
 * 1e-12 are clamped before the inverse square root.
 */
inline WhiteningResult zca_exact(const Matrix& x, double epsilon) {
  detail::require_batch(x);
  if (!(epsilon >= 0.0)) throw Error(ErrorKind::InvalidConfig, "epsilon must be >= 0");
  Centered c = center(x);
  const SymEig eig = sym_eig(detail::shrunk_covariance(c.centered, epsilon));
  std::vector<double> scale(eig.eigenvalues.size());
  for (std::size_t i = 0; i < scale.size(); ++i) {
    scale[i] = 1.0 / std::sqrt(std::max(eig.eigenvalues[i], kEigenvalueFloor));
  }
  Matrix transform = reconstruct(eig.eigenvectors, scale);
  Matrix whitened = matmul(c.centered, transform);
  return {std::move(whitened), std::move(c.mean), std::move(transform)};
}

/**
 * Whitening by Newton's iteration on the trace-normalized covariance
 * (Iterative Normalization):
 *
 *   S_N = (C + eps I) / tr(C + eps I),  P_0 = I,
 *   P_{k+1} = (3 P_k - P_k^3 S_N) / 2,
 *   transform = P_T / sqrt(tr(C + eps I)).
 */
inline WhiteningResult zca_iterative(const Matrix& x, const WhiteningConfig& cfg) {
  cfg.validate(x.cols());
  auto state = detail::iterative_forward(x, cfg);
  Matrix transform = state.iterates.back() * (1.0 / std::sqrt(state.trace_value));
  Matrix whitened = matmul(state.centered.centered, transform);
  return {std::move(whitened), std::move(state.centered.mean), std::move(transform)};
}

/// ||S_N P_k^2 - I||_F for k = 0..T, over the full (ungrouped) covariance.
inline std::vector<double> newton_residuals(const Matrix& x, const WhiteningConfig& cfg) {
  cfg.validate(x.cols());
  auto state = detail::iterative_forward(x, cfg);
  const Matrix eye = Matrix::identity(x.cols());
  std::vector<double> out;
  out.reserve(state.iterates.size());
  for (const Matrix& p : state.iterates) {
    out.push_back(frobenius_norm(matmul(state.normalized, matmul(p, p)) - eye));
  }
  return out;
}

namespace detail {

inline WhiteningResult whiten_single(const Matrix& x, const WhiteningConfig& cfg) {
  return cfg.method == WhiteningMethod::Exact ? zca_exact(x, cfg.epsilon) : zca_iterative(x, cfg);
}

}  // namespace detail

/// Whitens consecutive blocks of group_size columns independently; the
/// transform is block diagonal.
inline WhiteningResult whiten_grouped(const Matrix& x, const WhiteningConfig& cfg) {
  if (!cfg.group_size) throw Error(ErrorKind::BadGroupSize, "group size is not set");
  cfg.validate(x.cols());
  detail::require_batch(x);
  const std::size_t g = *cfg.group_size;
  const std::size_t f = x.cols();

  WhiteningResult out{Matrix(x.rows(), f), std::vector<double>(f), Matrix(f, f)};
  for (std::size_t start = 0; start < f; start += g) {
    WhiteningResult block = detail::whiten_single(x.column_block(start, g), cfg);
    for (std::size_t j = 0; j < g; ++j) {
      out.mean[start + j] = block.mean[j];
      for (std::size_t i = 0; i < g; ++i) out.transform(start + i, start + j) = block.transform(i, j);
      for (std::size_t r = 0; r < x.rows(); ++r) out.whitened(r, start + j) = block.whitened(r, j);
    }
  }
  return out;
}

/// Entry point honoring every field of the config.
inline WhiteningResult whiten(const Matrix& x, const WhiteningConfig& cfg) {
  cfg.validate(x.cols());
  if (cfg.group_size && *cfg.group_size != x.cols()) return whiten_grouped(x, cfg);
  return detail::whiten_single(x, cfg);
}

namespace detail {

/// Reverse mode through center -> covariance -> Newton recurrence -> matmul.
inline Matrix iterative_backward(const Matrix& x, const WhiteningConfig& cfg,
                                 const Matrix& grad_out) {
  const std::size_t n = x.rows();
  const std::size_t f = x.cols();
  auto state = iterative_forward(x, cfg);
  const Matrix& xc = state.centered.centered;
  const double inv_sqrt_tr = 1.0 / std::sqrt(state.trace_value);
  const Matrix& p_final = state.iterates.back();
  const Matrix transform = p_final * inv_sqrt_tr;

  // whitened = Xc W
  Matrix d_xc = matmul_nt(grad_out, transform);
  const Matrix d_w = matmul_tn(xc, grad_out);

  // W = P_T / sqrt(t)
  Matrix d_p = d_w * inv_sqrt_tr;
  double d_trace = 0.0;
  {
    double s = 0.0;
    for (std::size_t i = 0; i < d_w.size(); ++i) s += d_w.data()[i] * p_final.data()[i];
    d_trace += -0.5 * s * inv_sqrt_tr / state.trace_value;
  }

  // P_{k+1} = 1.5 P_k - 0.5 P_k P_k P_k S_N
  const Matrix& sn = state.normalized;
  Matrix d_sn(f, f);
  for (std::size_t k = cfg.iterations; k-- > 0;) {
    const Matrix& p = state.iterates[k];
    const Matrix pp = matmul(p, p);
    const Matrix ppp = matmul(pp, p);
    const Matrix p_sn = matmul(p, sn);
    const Matrix pp_sn = matmul(pp, sn);
    const Matrix d_m = d_p * -0.5;

    Matrix d_prev = d_p * 1.5;
    d_prev += matmul_nt(d_m, pp_sn);
    d_prev += matmul_nt(matmul_tn(p, d_m), p_sn);
    d_prev += matmul_nt(matmul_tn(pp, d_m), sn);
    d_sn += matmul_tn(ppp, d_m);
    d_p = std::move(d_prev);
  }

  // S_N = S / t,  t = tr(S),  S = C + eps I
  const double inv_tr = 1.0 / state.trace_value;
  Matrix d_s = d_sn * inv_tr;
  {
    double s = 0.0;
    for (std::size_t i = 0; i < d_sn.size(); ++i) s += d_sn.data()[i] * state.shrunk.data()[i];
    d_trace += -s * inv_tr * inv_tr;
  }
  for (std::size_t i = 0; i < f; ++i) d_s(i, i) += d_trace;

  // C = Xc^T Xc / n
  Matrix d_c_sym = d_s + d_s.transpose();
  d_xc += matmul(xc, d_c_sym) * (1.0 / static_cast<double>(n));

  // Xc = X - 1 mu^T, mu = column means
  Matrix d_x = d_xc;
  for (std::size_t j = 0; j < f; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += d_xc(i, j);
    const double m = s / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) d_x(i, j) -= m;
  }
  return d_x;
}

}  // namespace detail

/**
 * Gradient of a scalar loss with respect to X, given the loss gradient with
 * respect to the whitened output of the iterative path. epsilon and the
 * iteration count are treated as constants. Group configs are handled
 * block by block.
 */
inline Matrix whiten_backward(const Matrix& x, const WhiteningConfig& cfg, const Matrix& grad_out) {
  if (grad_out.rows() != x.rows() || grad_out.cols() != x.cols()) {
    throw Error(ErrorKind::ShapeMismatch,
                "grad_out is " + std::to_string(grad_out.rows()) + "x" +
                    std::to_string(grad_out.cols()) + " but input is " +
                    std::to_string(x.rows()) + "x" + std::to_string(x.cols()));
  }
  if (cfg.method != WhiteningMethod::Iterative) {
    throw Error(ErrorKind::InvalidConfig, "backward pass is only defined for the iterative method");
  }
  cfg.validate(x.cols());
  detail::require_batch(x);

  const std::size_t g = cfg.group_size.value_or(x.cols());
  if (g == x.cols()) return detail::iterative_backward(x, cfg, grad_out);

  Matrix out(x.rows(), x.cols());
  for (std::size_t start = 0; start < x.cols(); start += g) {
    Matrix block = detail::iterative_backward(x.column_block(start, g), cfg,
                                              grad_out.column_block(start, g));
    for (std::size_t r = 0; r < x.rows(); ++r)
      for (std::size_t j = 0; j < g; ++j) out(r, start + j) = block(r, j);
  }
  return out;
}

}  // namespace whitekit
