#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "test_support.hpp"
#include "whitekit/linalg.hpp"

using namespace whitekit;
using whitekit::testing::random_matrix;
using whitekit::testing::random_spd;

namespace {

Eigen::MatrixXd to_eigen(const Matrix& m) {
  Eigen::MatrixXd e(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) e(i, j) = m(i, j);
  return e;
}

}  // namespace

TEST(Matrix, RejectsNonFiniteAndEmpty) {
  EXPECT_THROW(Matrix(0, 3), Error);
  EXPECT_THROW(Matrix(2, 2, std::vector<double>{1.0, NAN, 0.0, 1.0}), Error);
  EXPECT_THROW(Matrix(2, 2, std::vector<double>{1.0, INFINITY, 0.0, 1.0}), Error);
  EXPECT_THROW(Matrix(2, 2, std::vector<double>{1.0, 2.0, 3.0}), Error);
  try {
    Matrix(1, 1, std::vector<double>{NAN});
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidMatrix);
  }
}

TEST(Center, ZeroInput) {
  const auto c = center(Matrix(3, 2));
  EXPECT_EQ(c.centered, Matrix(3, 2));
  EXPECT_EQ(c.mean, (std::vector<double>{0.0, 0.0}));
}

TEST(Center, HandArithmetic) {
  const Matrix x(3, 2, {1, 4, 2, 4, 3, 4});
  const auto c = center(x);
  EXPECT_EQ(c.mean, (std::vector<double>{2.0, 4.0}));
  EXPECT_EQ(c.centered, Matrix(3, 2, {-1, 0, 0, 0, 1, 0}));
}

TEST(Center, ColumnSumsVanish) {
  const Matrix x = random_matrix(64, 16, 11, 3.0);
  const auto c = center(x);
  for (std::size_t j = 0; j < 16; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < 64; ++i) s += c.centered(i, j);
    EXPECT_LT(std::abs(s), 1e-10);
  }
}

TEST(Center, ConstantColumnIsExactlyZero) {
  Matrix x(7, 1, 0.1);
  EXPECT_EQ(max_abs(center(x).centered), 0.0);
}

TEST(Covariance, ZeroInput) { EXPECT_EQ(covariance(Matrix(4, 3)), Matrix(3, 3)); }

TEST(Covariance, HandArithmetic) {
  const Matrix xc(3, 2, {-1, -2, 0, 0, 1, 2});
  const Matrix c = covariance(xc);
  EXPECT_NEAR(c(0, 0), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(c(0, 1), 4.0 / 3.0, 1e-15);
  EXPECT_NEAR(c(1, 0), 4.0 / 3.0, 1e-15);
  EXPECT_NEAR(c(1, 1), 8.0 / 3.0, 1e-15);
}

TEST(Covariance, SymmetricPsdAgainstReferenceSolver) {
  const Matrix c = covariance(center(random_matrix(100, 8, 5)).centered);
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = 0; j < 8; ++j) EXPECT_LE(std::abs(c(i, j) - c(j, i)), 1e-12);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ref(to_eigen(c));
  EXPECT_GE(ref.eigenvalues().minCoeff(), -1e-10);
}

TEST(Covariance, MatchesNaiveProduct) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Matrix x = random_matrix(37, 9, seed, 100.0);
    const Matrix xc = center(x).centered;
    const Matrix naive = matmul_tn(xc, xc) * (1.0 / 37.0);
    EXPECT_LE(max_abs_diff(covariance(xc), naive), 1e-10);
  }
}

TEST(SymEig, Identity) {
  const SymEig e = sym_eig(Matrix::identity(4));
  for (double v : e.eigenvalues) EXPECT_DOUBLE_EQ(v, 1.0);
  EXPECT_LE(max_abs_diff(matmul_tn(e.eigenvectors, e.eigenvectors), Matrix::identity(4)), 1e-12);
}

TEST(SymEig, DiagonalSortsDescending) {
  const SymEig e = sym_eig(Matrix(2, 2, {1, 0, 0, 3}));
  EXPECT_EQ(e.eigenvalues, (std::vector<double>{3.0, 1.0}));
  EXPECT_EQ(e.eigenvectors, Matrix(2, 2, {0, 1, 1, 0}));
}

TEST(SymEig, ReconstructsRandomSpd) {
  const Matrix c = random_spd(8, 3);
  const SymEig e = sym_eig(c);
  EXPECT_LT(max_abs_diff(reconstruct(e.eigenvectors, e.eigenvalues), c), 1e-8);
}

TEST(SymEig, InvariantsAcrossSizes) {
  for (std::size_t f : {1u, 2u, 5u, 16u, 64u, 256u}) {
    const Matrix c = random_spd(f, 100 + f);
    const SymEig e = sym_eig(c);
    const double scale = std::max(1.0, max_abs(c));
    EXPECT_LE(max_abs_diff(reconstruct(e.eigenvectors, e.eigenvalues), c), 1e-8 * scale) << f;
    EXPECT_LE(max_abs_diff(matmul_tn(e.eigenvectors, e.eigenvectors), Matrix::identity(f)), 1e-10)
        << f;
    EXPECT_TRUE(std::is_sorted(e.eigenvalues.rbegin(), e.eigenvalues.rend())) << f;
  }
}

TEST(SymEig, EigenvaluesMatchReferenceSolver) {
  const Matrix c = random_spd(12, 21);
  const SymEig e = sym_eig(c);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ref(to_eigen(c));
  for (std::size_t i = 0; i < 12; ++i) {
    EXPECT_NEAR(e.eigenvalues[i], ref.eigenvalues()(11 - static_cast<Eigen::Index>(i)),
                1e-10 * max_abs(c));
  }
}

TEST(SymEig, SignConvention) {
  const SymEig e = sym_eig(random_spd(10, 4));
  for (std::size_t k = 0; k < 10; ++k) {
    std::size_t pivot = 0;
    for (std::size_t r = 1; r < 10; ++r)
      if (std::abs(e.eigenvectors(r, k)) > std::abs(e.eigenvectors(pivot, k))) pivot = r;
    EXPECT_GT(e.eigenvectors(pivot, k), 0.0);
  }
}

TEST(SymEig, Deterministic) {
  const Matrix c = random_spd(20, 8);
  const SymEig a = sym_eig(c);
  const SymEig b = sym_eig(c);
  EXPECT_EQ(a.eigenvalues, b.eigenvalues);
  EXPECT_EQ(a.eigenvectors, b.eigenvectors);
}

TEST(SymEig, Errors) {
  try {
    sym_eig(Matrix(2, 2, {1.0, 0.5, 0.4, 1.0}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonSymmetric);
  }
  try {
    sym_eig(Matrix(2, 3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ShapeMismatch);
  }
}

TEST(SymEig, ZeroMatrix) {
  const SymEig e = sym_eig(Matrix(3, 3));
  for (double v : e.eigenvalues) EXPECT_EQ(v, 0.0);
}

TEST(SingularValues, PaddedDiagonal) {
  Matrix h(5, 2);
  h(0, 0) = 2.0;
  h(1, 1) = 3.0;
  const auto s = singular_values(h);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_NEAR(s[0], 3.0, 1e-15);
  EXPECT_NEAR(s[1], 2.0, 1e-15);
}

TEST(SingularValues, RankOneOuterProduct) {
  const std::vector<double> u = {0.6, 0.0, 0.8};
  const std::vector<double> v = {1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0)};
  Matrix h(3, 2);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 2; ++j) h(i, j) = u[i] * v[j];
  const auto s = singular_values(h);
  EXPECT_NEAR(s[0], 1.0, 1e-15);
  EXPECT_NEAR(s[1], 0.0, 1e-15);
}

TEST(SingularValues, MatchReferenceSvd) {
  for (auto [n, f] : {std::pair<std::size_t, std::size_t>{50, 10}, {10, 50}, {33, 33}}) {
    const Matrix h = random_matrix(n, f, n * 131 + f);
    const auto s = singular_values(h);
    Eigen::JacobiSVD<Eigen::MatrixXd> ref(to_eigen(h));
    ASSERT_EQ(s.size(), std::min(n, f));
    for (std::size_t i = 0; i < s.size(); ++i) {
      EXPECT_NEAR(s[i], ref.singularValues()(static_cast<Eigen::Index>(i)), 1e-8);
    }
  }
}

TEST(SingularValues, SquaresSumToFrobenius) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Matrix h = random_matrix(20 + seed, 7 + 2 * seed, seed, 5.0);
    double sum = 0.0;
    for (double s : singular_values(h)) sum += s * s;
    const double fro2 = std::pow(frobenius_norm(h), 2);
    EXPECT_LE(std::abs(sum - fro2), 1e-10 * fro2);
  }
}

TEST(SingularValues, GramRouteAgreesOnWellConditionedInput) {
  // Second algebraic route: sqrt of the eigenvalues of H^T H.
  const Matrix h = random_matrix(40, 6, 77);
  const auto direct = singular_values(h);
  const SymEig gram = sym_eig(matmul_tn(h, h));
  for (std::size_t i = 0; i < direct.size(); ++i) {
    EXPECT_NEAR(direct[i], std::sqrt(std::max(0.0, gram.eigenvalues[i])), 1e-9);
  }
}
