#pragma once

// Small dense complex linear algebra used throughout the library. Everything
// here is a thin, validated layer over Eigen: Hermitian eigendecomposition,
// the unitary propagator exp(i t A), Frobenius norms and a QR factorization
// with a positive real diagonal.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>

namespace interlace {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

class NumericsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Derived>
using RealOf = typename Eigen::NumTraits<typename Derived::Scalar>::Real;

template <typename Derived>
using ComplexOf = std::complex<RealOf<Derived>>;

/// sqrt(sum |a_ij|^2).
template <typename Derived>
RealOf<Derived> frobenius_norm(const Eigen::MatrixBase<Derived>& a) {
  return a.norm();
}

/// max |A - A^H| relative to max |A| (0 for the zero matrix).
template <typename Derived>
RealOf<Derived> hermitian_defect(const Eigen::MatrixBase<Derived>& a) {
  using Real = RealOf<Derived>;
  if (a.rows() != a.cols()) return std::numeric_limits<Real>::infinity();
  if (a.size() == 0) return Real(0);
  const Real scale = a.cwiseAbs().maxCoeff();
  if (scale == Real(0)) return Real(0);
  return (a - a.adjoint()).cwiseAbs().maxCoeff() / scale;
}

/// ||U^H U - I||_F.
template <typename Derived>
RealOf<Derived> unitarity_defect(const Eigen::MatrixBase<Derived>& u) {
  using Scalar = typename Derived::Scalar;
  if (u.rows() != u.cols()) return std::numeric_limits<RealOf<Derived>>::infinity();
  return (u.adjoint() * u - DenseMatrix<Scalar>::Identity(u.rows(), u.cols())).norm();
}

inline constexpr double kHermitianTolerance = 1e-14;

template <typename Scalar>
struct EigenDecomposition {
  using Real = typename Eigen::NumTraits<Scalar>::Real;
  /// Ascending.
  Eigen::Matrix<Real, Eigen::Dynamic, 1> eigenvalues;
  /// Orthonormal columns.
  DenseMatrix<Scalar> eigenvectors;
};

/// Eigendecomposition of a Hermitian (or real symmetric) matrix.
///
/// Rejects inputs whose anti-Hermitian part exceeds kHermitianTolerance
/// relative to the largest entry, and reports solver non-convergence instead
/// of returning partial results.
template <typename Derived>
EigenDecomposition<typename Derived::Scalar> eig_hermitian(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  if (a.rows() != a.cols()) {
    std::ostringstream msg;
    msg << "eig_hermitian: matrix is " << a.rows() << "x" << a.cols() << ", expected square";
    throw NumericsError(msg.str());
  }
  if (!a.allFinite()) throw NumericsError("eig_hermitian: non-finite entries");
  const auto defect = hermitian_defect(a);
  if (defect > kHermitianTolerance) {
    std::ostringstream msg;
    msg << "eig_hermitian: matrix is not Hermitian (relative defect " << defect << ")";
    throw NumericsError(msg.str());
  }
  Eigen::SelfAdjointEigenSolver<DenseMatrix<Scalar>> solver(a.derived());
  if (solver.info() != Eigen::Success) {
    throw NumericsError("eig_hermitian: eigensolver failed to converge");
  }
  return {solver.eigenvalues(), solver.eigenvectors()};
}

/// exp(i t A) for Hermitian A, assembled as V diag(exp(i t lambda)) V^H so the
/// result is unitary up to rounding.
template <typename Derived>
DenseMatrix<ComplexOf<Derived>> expm_i_scaled(const Eigen::MatrixBase<Derived>& a, RealOf<Derived> t) {
  using Cplx = ComplexOf<Derived>;
  const auto eig = eig_hermitian(a);
  const DenseMatrix<Cplx> v = eig.eigenvectors.template cast<Cplx>();
  Eigen::Matrix<Cplx, Eigen::Dynamic, 1> phases(eig.eigenvalues.size());
  for (Eigen::Index k = 0; k < phases.size(); ++k) {
    phases(k) = std::polar(RealOf<Derived>(1), t * eig.eigenvalues(k));
  }
  return v * phases.asDiagonal() * v.adjoint();
}

template <typename Scalar>
struct QrFactors {
  DenseMatrix<Scalar> q;
  DenseMatrix<Scalar> r;
};

/// A = Q R with Q unitary and R upper triangular with a positive real diagonal.
/// Throws when |R_kk| falls below a rank tolerance relative to ||A||_F.
template <typename Derived>
QrFactors<typename Derived::Scalar> qr_unitary(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  using Real = RealOf<Derived>;
  if (a.rows() != a.cols()) throw NumericsError("qr_unitary: matrix must be square");
  const Eigen::Index n = a.rows();
  Eigen::HouseholderQR<DenseMatrix<Scalar>> qr(a.derived());
  DenseMatrix<Scalar> q = qr.householderQ() * DenseMatrix<Scalar>::Identity(n, n);
  DenseMatrix<Scalar> r = qr.matrixQR().template triangularView<Eigen::Upper>();

  const Real tol = Real(n) * Eigen::NumTraits<Real>::epsilon() * a.norm();
  for (Eigen::Index k = 0; k < n; ++k) {
    const Real mag = std::abs(r(k, k));
    if (!(mag > tol)) throw NumericsError("qr_unitary: matrix is rank deficient");
    // Move the phase of R_kk into column k of Q.
    const Scalar unit = r(k, k) / mag;
    q.col(k) *= unit;
    r.row(k) *= Eigen::numext::conj(unit);
    r(k, k) = mag;
  }
  return {std::move(q), std::move(r)};
}

}  // namespace interlace
