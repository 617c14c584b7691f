#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "whitekit/error.hpp"

namespace whitekit {

/**
 * Dense row-major matrix of doubles.
 *
 * A matrix always has at least one row and one column, and every entry is
 * finite when it is built from external data. Element access through
 * operator() is unchecked; it is meant for the numerical kernels.
 */
class Matrix {
 public:
  Matrix(std::size_t rows, std::size_t cols) : Matrix(rows, cols, 0.0) {}

  Matrix(std::size_t rows, std::size_t cols, double fill)
      : rows_(rows), cols_(cols) {
    check_shape();
    data_.assign(rows * cols, fill);
    if (!std::isfinite(fill)) {
      throw Error(ErrorKind::InvalidMatrix, "fill value is not finite");
    }
  }

  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    check_shape();
    if (data_.size() != rows_ * cols_) {
      throw Error(ErrorKind::InvalidMatrix,
                  "data length " + std::to_string(data_.size()) + " does not match " +
                      std::to_string(rows_) + "x" + std::to_string(cols_));
    }
    for (std::size_t i = 0; i < data_.size(); ++i) {
      if (!std::isfinite(data_[i])) {
        throw Error(ErrorKind::InvalidMatrix,
                    "non-finite entry at row " + std::to_string(i / cols_) + ", column " +
                        std::to_string(i % cols_));
      }
    }
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static Matrix diagonal(std::span<const double> values) {
    Matrix m(values.size(), values.size());
    for (std::size_t i = 0; i < values.size(); ++i) m(i, i) = values[i];
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool is_square() const noexcept { return rows_ == cols_; }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  std::vector<double> column(std::size_t c) const {
    std::vector<double> out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
    return out;
  }

  Matrix transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
  }

  /// Copy of the columns [first, first + count).
  Matrix column_block(std::size_t first, std::size_t count) const {
    Matrix out(rows_, count);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < count; ++c) out(r, c) = (*this)(r, first + c);
    return out;
  }

  Matrix& operator+=(const Matrix& other) {
    require_same_shape(other, "+=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
  }

  Matrix& operator-=(const Matrix& other) {
    require_same_shape(other, "-=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
    return *this;
  }

  Matrix& operator*=(double s) noexcept {
    for (double& v : data_) v *= s;
    return *this;
  }

  bool operator==(const Matrix& other) const = default;

 private:
  void check_shape() const {
    if (rows_ == 0 || cols_ == 0) {
      throw Error(ErrorKind::InvalidMatrix, "matrix dimensions must be at least 1x1");
    }
  }

  void require_same_shape(const Matrix& other, const char* op) const {
    if (rows_ != other.rows_ || cols_ != other.cols_) {
      throw Error(ErrorKind::ShapeMismatch,
                  std::string(op) + " on " + std::to_string(rows_) + "x" + std::to_string(cols_) +
                      " and " + std::to_string(other.rows_) + "x" + std::to_string(other.cols_));
    }
  }

  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> data_;
};

inline Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
inline Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
inline Matrix operator*(Matrix a, double s) { return a *= s; }
inline Matrix operator*(double s, Matrix a) { return a *= s; }

/// a * b
inline Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw Error(ErrorKind::ShapeMismatch, "matmul inner dimensions " + std::to_string(a.cols()) +
                                              " and " + std::to_string(b.rows()));
  }
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out_row = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto b_row = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aik * b_row[j];
    }
  }
  return out;
}

/// a^T * b without materializing the transpose.
inline Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw Error(ErrorKind::ShapeMismatch, "matmul_tn row counts " + std::to_string(a.rows()) +
                                              " and " + std::to_string(b.rows()));
  }
  Matrix out(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    auto a_row = a.row(k);
    auto b_row = b.row(k);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = a_row[i];
      if (aki == 0.0) continue;
      auto out_row = out.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aki * b_row[j];
    }
  }
  return out;
}

/// a * b^T
inline Matrix matmul_nt(const Matrix& a, const Matrix& b) { return matmul(a, b.transpose()); }

inline double trace(const Matrix& m) {
  double t = 0.0;
  for (std::size_t i = 0; i < std::min(m.rows(), m.cols()); ++i) t += m(i, i);
  return t;
}

inline double max_abs(const Matrix& m) {
  double best = 0.0;
  for (double v : m.data()) best = std::max(best, std::abs(v));
  return best;
}

inline double frobenius_norm(const Matrix& m) {
  double s = 0.0;
  for (double v : m.data()) s += v * v;
  return std::sqrt(s);
}

/// Largest |a_ij - b_ij|.
inline double max_abs_diff(const Matrix& a, const Matrix& b) { return max_abs(a - b); }

}  // namespace whitekit
