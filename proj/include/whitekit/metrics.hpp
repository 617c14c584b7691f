#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "whitekit/error.hpp"
#include "whitekit/linalg.hpp"
#include "whitekit/matrix.hpp"

namespace whitekit {

/// Feature-space diagnostics for an embedding matrix H (rows are samples).
struct FeatureReport {
  std::size_t n = 0;
  std::size_t f = 0;
  double mean_abs_corr = 0.0;
  double mean_std = 0.0;
  double anisotropy = 0.0;                    // of H as given
  std::optional<double> anisotropy_centered;  // empty when centered H is zero
  std::size_t numerical_rank = 0;
  std::vector<double> singular_values;        // of H as given
};

inline constexpr double kDoubleEpsilon = std::numeric_limits<double>::epsilon();
inline constexpr double kFloatEpsilon = std::numeric_limits<float>::epsilon();

namespace detail {

inline void require_rows(const Matrix& h, std::size_t min_rows, const char* what) {
  if (h.rows() < min_rows) {
    throw Error(ErrorKind::DegenerateInput, std::string(what) + " needs at least " +
                                                std::to_string(min_rows) + " samples, got " +
                                                std::to_string(h.rows()));
  }
}

inline void require_cols(const Matrix& h, std::size_t min_cols, const char* what) {
  if (h.cols() < min_cols) {
    throw Error(ErrorKind::DegenerateInput, std::string(what) + " needs at least " +
                                                std::to_string(min_cols) + " features, got " +
                                                std::to_string(h.cols()));
  }
}

// Pairs with a zero-variance member contribute 0.
inline double mean_abs_corr_from_cov(const Matrix& c) {
  const std::size_t f = c.rows();
  double sum = 0.0;
  for (std::size_t i = 0; i < f; ++i) {
    for (std::size_t j = 0; j < f; ++j) {
      if (i == j) continue;
      const double denom = c(i, i) * c(j, j);
      if (!(denom > 0.0)) continue;
      sum += std::abs(c(i, j) / std::sqrt(denom));
    }
  }
  return sum / static_cast<double>(f * (f - 1));
}

inline double mean_std_from_cov(const Matrix& c, std::size_t n) {
  const double correction = static_cast<double>(n) / static_cast<double>(n - 1);
  double sum = 0.0;
  for (std::size_t j = 0; j < c.rows(); ++j) sum += std::sqrt(c(j, j) * correction);
  return sum / static_cast<double>(c.rows());
}

}  // namespace detail

/// sigma_1^2 / sum sigma_i^2 over a descending spectrum.
inline double anisotropy_from_spectrum(std::span<const double> sigma) {
  double total = 0.0;
  for (double s : sigma) total += s * s;
  if (sigma.empty() || !(total > 0.0)) {
    throw Error(ErrorKind::ZeroMatrix, "anisotropy of a zero matrix is undefined");
  }
  return sigma[0] * sigma[0] / total;
}

/// Count of sigma_i above max(n, f) * machine_eps * sigma_1.
inline std::size_t numerical_rank_from_spectrum(std::span<const double> sigma, std::size_t n,
                                                std::size_t f,
                                                double machine_eps = kDoubleEpsilon) {
  if (sigma.empty() || sigma[0] == 0.0) return 0;
  const double tau = static_cast<double>(std::max(n, f)) * machine_eps * sigma[0];
  std::size_t rank = 0;
  for (double s : sigma) rank += s > tau ? 1 : 0;
  return rank;
}

/// Mean |off-diagonal| of the feature correlation matrix.
inline double mean_abs_correlation(const Matrix& h) {
  detail::require_rows(h, 2, "mean_abs_correlation");
  detail::require_cols(h, 2, "mean_abs_correlation");
  return detail::mean_abs_corr_from_cov(covariance(center(h).centered));
}

/// Mean corrected (divisor n - 1) standard deviation of the feature columns.
inline double mean_feature_std(const Matrix& h) {
  detail::require_rows(h, 2, "mean_feature_std");
  return detail::mean_std_from_cov(covariance(center(h).centered), h.rows());
}

/// Anisotropy of H exactly as given; center first if that is what you want.
inline double anisotropy(const Matrix& h) { return anisotropy_from_spectrum(singular_values(h)); }

/// `machine_eps` sets the rounding level the threshold is scaled by; pass
/// kFloatEpsilon for data that went through 32-bit storage.
inline std::size_t numerical_rank(const Matrix& h, double machine_eps = kDoubleEpsilon) {
  return numerical_rank_from_spectrum(singular_values(h), h.rows(), h.cols(), machine_eps);
}

/// All diagnostics from one centering and one spectrum per variant.
inline FeatureReport report(const Matrix& h, double machine_eps = kDoubleEpsilon) {
  detail::require_rows(h, 2, "report");
  detail::require_cols(h, 2, "report");

  FeatureReport r;
  r.n = h.rows();
  r.f = h.cols();

  const Centered c = center(h);
  const Matrix cov = covariance(c.centered);
  r.mean_abs_corr = detail::mean_abs_corr_from_cov(cov);
  r.mean_std = detail::mean_std_from_cov(cov, h.rows());

  r.singular_values = singular_values(h);
  r.anisotropy = anisotropy_from_spectrum(r.singular_values);
  r.numerical_rank = numerical_rank_from_spectrum(r.singular_values, r.n, r.f, machine_eps);

  const auto centered_sigma = singular_values(c.centered);
  if (!centered_sigma.empty() && centered_sigma[0] > 0.0) {
    r.anisotropy_centered = anisotropy_from_spectrum(centered_sigma);
  }
  return r;
}

}  // namespace whitekit
