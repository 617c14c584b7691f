#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "whitekit/error.hpp"
#include "whitekit/matrix.hpp"

namespace whitekit {

struct Centered {
  Matrix centered;
  std::vector<double> mean;
};

/// Subtracts the column means. A constant column centers to exact zeros.
inline Centered center(const Matrix& x) {
  const std::size_t n = x.rows();
  const std::size_t f = x.cols();
  std::vector<double> mean(f, 0.0);
  std::vector<bool> constant(f, true);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = x.row(i);
    for (std::size_t j = 0; j < f; ++j) {
      mean[j] += row[j];
      if (row[j] != x(0, j)) constant[j] = false;
    }
  }
  for (std::size_t j = 0; j < f; ++j) {
    mean[j] = constant[j] ? x(0, j) : mean[j] / static_cast<double>(n);
  }

  Matrix xc(n, f);
  for (std::size_t i = 0; i < n; ++i) {
    auto in = x.row(i);
    auto out = xc.row(i);
    for (std::size_t j = 0; j < f; ++j) out[j] = in[j] - mean[j];
  }
  return {std::move(xc), std::move(mean)};
}

/// (1/n) Xc^T Xc. Only the upper triangle is accumulated, so the result is
/// exactly symmetric.
inline Matrix covariance(const Matrix& xc) {
  const std::size_t n = xc.rows();
  const std::size_t f = xc.cols();
  Matrix c(f, f);
  for (std::size_t k = 0; k < n; ++k) {
    auto row = xc.row(k);
    for (std::size_t i = 0; i < f; ++i) {
      const double xi = row[i];
      for (std::size_t j = i; j < f; ++j) c(i, j) += xi * row[j];
    }
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < f; ++i) {
    for (std::size_t j = i; j < f; ++j) {
      c(i, j) *= inv_n;
      c(j, i) = c(i, j);
    }
  }
  return c;
}

struct SymEig {
  std::vector<double> eigenvalues;  // descending
  Matrix eigenvectors;              // column i pairs with eigenvalue i
};

namespace detail {

inline void check_symmetric(const Matrix& c, double rel_tol) {
  if (!c.is_square()) {
    throw Error(ErrorKind::ShapeMismatch, "expected a square matrix, got " +
                                              std::to_string(c.rows()) + "x" +
                                              std::to_string(c.cols()));
  }
  const double tol = rel_tol * std::max(1.0, max_abs(c));
  for (std::size_t i = 0; i < c.rows(); ++i) {
    for (std::size_t j = i + 1; j < c.cols(); ++j) {
      if (std::abs(c(i, j) - c(j, i)) > tol) {
        throw Error(ErrorKind::NonSymmetric, "entries (" + std::to_string(i) + "," +
                                                 std::to_string(j) + ") differ by " +
                                                 std::to_string(std::abs(c(i, j) - c(j, i))));
      }
    }
  }
}

inline double off_diagonal_norm(const Matrix& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = i + 1; j < a.cols(); ++j) s += a(i, j) * a(i, j);
  return std::sqrt(2.0 * s);
}

}  // namespace detail

inline constexpr int kJacobiSweepBudget = 64;

/**
 * Symmetric eigendecomposition by cyclic Jacobi rotations.
 *
 * Sweeps continue until the off-diagonal Frobenius mass drops below
 * 1e-12 * ||C||_F. Eigenvalues come back sorted descending and each
 * eigenvector is signed so that its largest-magnitude entry is positive.
 */
inline SymEig sym_eig(const Matrix& c) {
  detail::check_symmetric(c, 1e-9);
  const std::size_t f = c.rows();

  Matrix a(f, f);
  for (std::size_t i = 0; i < f; ++i)
    for (std::size_t j = 0; j < f; ++j) a(i, j) = 0.5 * (c(i, j) + c(j, i));
  Matrix v = Matrix::identity(f);

  const double target = 1e-12 * frobenius_norm(a);
  bool converged = false;
  for (int sweep = 0; sweep <= kJacobiSweepBudget; ++sweep) {
    const double off = detail::off_diagonal_norm(a);
    if (off == 0.0 || off < target) {
      converged = true;
      break;
    }
    if (sweep == kJacobiSweepBudget) break;

    for (std::size_t p = 0; p + 1 < f; ++p) {
      for (std::size_t q = p + 1; q < f; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        // Once the sweep count is past the quadratic-convergence onset, an
        // entry below the diagonals' rounding level is dropped outright.
        const double g = 100.0 * std::abs(apq);
        if (sweep > 3 && std::abs(a(p, p)) + g == std::abs(a(p, p)) &&
            std::abs(a(q, q)) + g == std::abs(a(q, q))) {
          a(p, q) = 0.0;
          a(q, p) = 0.0;
          continue;
        }

        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        double t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        if (theta < 0.0) t = -t;
        const double cs = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * cs;

        a(p, p) -= t * apq;
        a(q, q) += t * apq;
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (std::size_t r = 0; r < f; ++r) {
          if (r == p || r == q) continue;
          const double arp = a(r, p);
          const double arq = a(r, q);
          a(r, p) = cs * arp - sn * arq;
          a(p, r) = a(r, p);
          a(r, q) = sn * arp + cs * arq;
          a(q, r) = a(r, q);
        }
        for (std::size_t r = 0; r < f; ++r) {
          const double vrp = v(r, p);
          const double vrq = v(r, q);
          v(r, p) = cs * vrp - sn * vrq;
          v(r, q) = sn * vrp + cs * vrq;
        }
      }
    }
  }
  if (!converged) {
    throw Error(ErrorKind::NoConvergence,
                "Jacobi eigensolver did not converge in " + std::to_string(kJacobiSweepBudget) +
                    " sweeps");
  }

  std::vector<std::size_t> order(f);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });

  SymEig out{std::vector<double>(f), Matrix(f, f)};
  for (std::size_t k = 0; k < f; ++k) {
    const std::size_t src = order[k];
    out.eigenvalues[k] = a(src, src);
    std::size_t pivot = 0;
    for (std::size_t r = 1; r < f; ++r) {
      if (std::abs(v(r, src)) > std::abs(v(pivot, src))) pivot = r;
    }
    const double sign = v(pivot, src) < 0.0 ? -1.0 : 1.0;
    for (std::size_t r = 0; r < f; ++r) out.eigenvectors(r, k) = sign * v(r, src);
  }
  return out;
}

/// V diag(values) V^T, accumulated symmetrically.
inline Matrix reconstruct(const Matrix& v, std::span<const double> values) {
  const std::size_t f = v.rows();
  Matrix out(f, f);
  for (std::size_t i = 0; i < f; ++i) {
    for (std::size_t j = i; j < f; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < values.size(); ++k) s += v(i, k) * values[k] * v(j, k);
      out(i, j) = s;
      out(j, i) = s;
    }
  }
  return out;
}

/**
 * Singular values in descending order, length min(n, f).
 *
 * Computed by one-sided (Hestenes) Jacobi orthogonalization of the columns
 * of H (or of H^T when f > n). Unlike the eigenvalues of the Gram matrix,
 * this keeps small singular values accurate to roughly machine epsilon
 * times sigma_1, which the numerical-rank threshold depends on.
 */
inline std::vector<double> singular_values(const Matrix& h) {
  // Work on a column-major copy of the tall orientation: cols[j] is column j.
  const bool transpose = h.cols() > h.rows();
  const std::size_t m = transpose ? h.cols() : h.rows();
  const std::size_t k = transpose ? h.rows() : h.cols();
  std::vector<std::vector<double>> cols(k, std::vector<double>(m));
  for (std::size_t r = 0; r < h.rows(); ++r) {
    for (std::size_t c = 0; c < h.cols(); ++c) {
      if (transpose) {
        cols[r][c] = h(r, c);
      } else {
        cols[c][r] = h(r, c);
      }
    }
  }

  auto dot = [m](const std::vector<double>& x, const std::vector<double>& y) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += x[i] * y[i];
    return s;
  };

  const double tol = static_cast<double>(m) * std::numeric_limits<double>::epsilon();
  // Columns this small are rounding residue of parallel columns; rotating them
  // against large ones never settles.
  double energy = 0.0;
  for (const auto& c : cols) energy += dot(c, c);
  const double negligible = energy * std::numeric_limits<double>::epsilon() *
                            std::numeric_limits<double>::epsilon();
  bool converged = k < 2;
  for (int sweep = 0; sweep < kJacobiSweepBudget && !converged; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < k; ++p) {
      for (std::size_t q = p + 1; q < k; ++q) {
        const double alpha = dot(cols[p], cols[p]);
        const double beta = dot(cols[q], cols[q]);
        if (alpha <= negligible || beta <= negligible) continue;
        const double gamma = dot(cols[p], cols[q]);
        if (std::abs(gamma) <= tol * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        double t = 1.0 / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        if (zeta < 0.0) t = -t;
        const double cs = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = cs * t;
        auto& xp = cols[p];
        auto& xq = cols[q];
        for (std::size_t i = 0; i < m; ++i) {
          const double u = xp[i];
          const double w = xq[i];
          xp[i] = cs * u - sn * w;
          xq[i] = sn * u + cs * w;
        }
      }
    }
    converged = !rotated;
  }
  if (!converged) {
    throw Error(ErrorKind::NoConvergence,
                "one-sided Jacobi SVD did not converge in " +
                    std::to_string(kJacobiSweepBudget) + " sweeps");
  }

  std::vector<double> sigma(k);
  for (std::size_t j = 0; j < k; ++j) sigma[j] = std::sqrt(dot(cols[j], cols[j]));
  std::sort(sigma.begin(), sigma.end(), std::greater<>());
  return sigma;
}

}  // namespace whitekit
