#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "interlace/numerics.hpp"

using namespace interlace;
using namespace std::complex_literals;

namespace {

ComplexMatrix random_hermitian(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  ComplexMatrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = Complex(g(rng), g(rng));
  return (a + a.adjoint()) / 2.0;
}

// Sturm sequence for a symmetric tridiagonal matrix with zero diagonal and
// off-diagonal b: the number of eigenvalues strictly below x.
int sturm_count_below(const std::vector<double>& b, double x) {
  int count = 0;
  double q = -x;
  if (q < 0) ++count;
  for (double bk : b) {
    if (q == 0.0) q = 1e-300;
    q = -x - bk * bk / q;
    if (q < 0) ++count;
  }
  return count;
}

}  // namespace

TEST(FrobeniusNorm, Identity) {
  EXPECT_DOUBLE_EQ(frobenius_norm(ComplexMatrix::Identity(5, 5)), std::sqrt(5.0));
}

TEST(FrobeniusNorm, Zero) { EXPECT_EQ(frobenius_norm(ComplexMatrix::Zero(3, 3)), 0.0); }

TEST(FrobeniusNorm, ThreeFourFive) {
  ComplexMatrix a(2, 2);
  a << 3.0, 4.0i, 0.0, 0.0;
  EXPECT_NEAR(frobenius_norm(a), 5.0, 1e-15);
}

TEST(EigHermitian, TwoByTwoClosedForm) {
  RealMatrix a(2, 2);
  a << 0, 0.5, 0.5, 0;
  const auto eig = eig_hermitian(a);
  EXPECT_NEAR(eig.eigenvalues(0), -0.5, 1e-15);
  EXPECT_NEAR(eig.eigenvalues(1), 0.5, 1e-15);
}

TEST(EigHermitian, IdentityThree) {
  const auto eig = eig_hermitian(ComplexMatrix::Identity(3, 3));
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(eig.eigenvalues(k), 1.0, 1e-15);
  EXPECT_LT(unitarity_defect(eig.eigenvectors), 1e-12);
}

TEST(EigHermitian, JxFourMatchesSturmCount) {
  const double s = std::sqrt(3.0) / 2.0;
  const std::vector<double> b{s, 1.0, s};
  RealMatrix h = RealMatrix::Zero(4, 4);
  for (int p = 0; p < 3; ++p) h(p, p + 1) = h(p + 1, p) = b[p];
  const auto eig = eig_hermitian(h);
  const double expected[] = {-1.5, -0.5, 0.5, 1.5};
  for (int j = 0; j < 4; ++j) {
    EXPECT_NEAR(eig.eigenvalues(j), expected[j], 1e-12);
    // Exactly j eigenvalues lie below expected[j] - eps, j + 1 below + eps.
    EXPECT_EQ(sturm_count_below(b, expected[j] - 1e-9), j);
    EXPECT_EQ(sturm_count_below(b, expected[j] + 1e-9), j + 1);
  }
}

TEST(EigHermitian, RejectsNonHermitian) {
  ComplexMatrix a(2, 2);
  a << 0, 1, 0, 0;
  EXPECT_THROW(eig_hermitian(a), NumericsError);
}

TEST(EigHermitian, RejectsNonSquareAndNonFinite) {
  EXPECT_THROW(eig_hermitian(ComplexMatrix::Zero(2, 3)), NumericsError);
  ComplexMatrix a = ComplexMatrix::Identity(2, 2);
  a(0, 0) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(eig_hermitian(a), NumericsError);
}

TEST(EigHermitian, ReconstructionOnRandomInputs) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 2 + trial % 15;
    const ComplexMatrix a = random_hermitian(n, rng);
    const auto eig = eig_hermitian(a);
    const ComplexMatrix& v = eig.eigenvectors;
    ASSERT_LT(unitarity_defect(v), 1e-12) << "n=" << n;
    const double rel = (a * v - v * eig.eigenvalues.cast<Complex>().asDiagonal()).norm() / a.norm();
    ASSERT_LT(rel, 1e-12) << "n=" << n;
    for (int k = 1; k < n; ++k) ASSERT_LE(eig.eigenvalues(k - 1), eig.eigenvalues(k));
  }
}

TEST(ExpmIScaled, ZeroTimeIsIdentity) {
  std::mt19937_64 rng(3);
  const ComplexMatrix a = random_hermitian(5, rng);
  EXPECT_LT((expm_i_scaled(a, 0.0) - ComplexMatrix::Identity(5, 5)).norm(), 1e-13);
}

TEST(ExpmIScaled, PauliXClosedForm) {
  RealMatrix h(2, 2);
  h << 0, 0.5, 0.5, 0;
  ComplexMatrix expected(2, 2);
  expected << 1.0, 1.0i, 1.0i, 1.0;
  expected /= std::sqrt(2.0);
  EXPECT_LT((expm_i_scaled(h, std::numbers::pi / 2) - expected).norm(), 1e-14);
}

TEST(ExpmIScaled, JxFullPeriodIsMinusIdentity) {
  const double s = std::sqrt(3.0) / 2.0;
  RealMatrix h = RealMatrix::Zero(4, 4);
  h(0, 1) = h(1, 0) = s;
  h(1, 2) = h(2, 1) = 1.0;
  h(2, 3) = h(3, 2) = s;
  const ComplexMatrix u = expm_i_scaled(h, 2 * std::numbers::pi);
  EXPECT_LT((u + ComplexMatrix::Identity(4, 4)).norm(), 1e-12);
}

TEST(ExpmIScaled, UnitaryAndGroupProperty) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> time(-3.0, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    const ComplexMatrix a = random_hermitian(8, rng);
    const double t = time(rng), s = time(rng);
    const ComplexMatrix et = expm_i_scaled(a, t);
    ASSERT_LT(unitarity_defect(et), 1e-12);
    ASSERT_LT((et * expm_i_scaled(a, s) - expm_i_scaled(a, t + s)).norm(), 1e-11);
  }
}

TEST(QrUnitary, Identity) {
  const auto f = qr_unitary(ComplexMatrix::Identity(3, 3));
  EXPECT_LT((f.q - ComplexMatrix::Identity(3, 3)).norm(), 1e-15);
  EXPECT_LT((f.r - ComplexMatrix::Identity(3, 3)).norm(), 1e-15);
}

TEST(QrUnitary, DiagonalKeepsPositiveDiagonal) {
  ComplexMatrix a = ComplexMatrix::Zero(2, 2);
  a(0, 0) = 2.0;
  a(1, 1) = 3.0;
  const auto f = qr_unitary(a);
  EXPECT_LT((f.q - ComplexMatrix::Identity(2, 2)).norm(), 1e-15);
  EXPECT_LT((f.r - a).norm(), 1e-15);
}

TEST(QrUnitary, RandomGaussianReconstruction) {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + trial % 12;
    ComplexMatrix a(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) a(i, j) = Complex(g(rng), g(rng));
    const auto f = qr_unitary(a);
    ASSERT_LT((f.q * f.r - a).norm() / a.norm(), 1e-12);
    ASSERT_LT(unitarity_defect(f.q), 1e-12);
    for (int i = 0; i < n; ++i) {
      ASSERT_GT(f.r(i, i).real(), 0.0);
      ASSERT_EQ(f.r(i, i).imag(), 0.0);
      for (int j = 0; j < i; ++j) ASSERT_EQ(f.r(i, j), Complex(0.0));
    }
  }
}

TEST(QrUnitary, RejectsRankDeficient) {
  ComplexMatrix a(2, 2);
  a << 1, 2, 2, 4;
  EXPECT_THROW(qr_unitary(a), NumericsError);
}

TEST(Defects, HermitianAndUnitary) {
  EXPECT_EQ(hermitian_defect(ComplexMatrix::Zero(3, 3)), 0.0);
  ComplexMatrix a(2, 2);
  a << 1, 1.0i, 1.0i, 1;
  EXPECT_NEAR(hermitian_defect(a), 2.0, 1e-15);
  EXPECT_NEAR(unitarity_defect(ComplexMatrix::Identity(4, 4)), 0.0, 1e-15);
  EXPECT_NEAR(unitarity_defect(2.0 * ComplexMatrix::Identity(1, 1)), 3.0, 1e-15);
}
