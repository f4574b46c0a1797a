#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>

namespace lrt {

using cxd = std::complex<double>;

/// A d x d complex Hermitian matrix with no positivity or trace constraint.
/// Least-squares and truncated estimates live here.
using HermitianEstimate = Eigen::MatrixXcd;

namespace tol {
inline constexpr double hermitian = 1e-12;
inline constexpr double trace_one = 1e-12;
inline constexpr double psd = 1e-10;
}  // namespace tol

inline Eigen::MatrixXcd symmetrized(const Eigen::MatrixXcd& m) {
  return 0.5 * (m + m.adjoint());
}

inline double max_abs(const Eigen::MatrixXcd& m) {
  return m.cwiseAbs().maxCoeff();
}

/// Squared Frobenius norm, sum of squared entry moduli.
inline double frobenius_norm_sq(const Eigen::MatrixXcd& m) {
  return m.squaredNorm();
}

/// Squared Frobenius distance between two equally sized matrices.
inline double frobenius_error_sq(const Eigen::MatrixXcd& a,
                                 const Eigen::MatrixXcd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("frobenius_error_sq: dimension mismatch");
  return (a - b).squaredNorm();
}

/// Largest absolute eigenvalue of a Hermitian matrix.
inline double operator_norm(const Eigen::MatrixXcd& herm) {
  if (herm.rows() != herm.cols())
    throw std::invalid_argument("operator_norm: matrix must be square");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(symmetrized(herm),
                                                         Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("operator_norm: eigensolver failed");
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

/// A quantum state: Hermitian, positive semidefinite, trace one.
/// Construction validates the invariants and stores the symmetrized matrix.
class DensityMatrix {
 public:
  explicit DensityMatrix(Eigen::MatrixXcd m) {
    if (m.rows() != m.cols())
      throw std::invalid_argument("DensityMatrix: matrix must be square");
    if (max_abs(m - m.adjoint()) > tol::hermitian)
      throw std::invalid_argument("DensityMatrix: matrix is not Hermitian");
    mat_ = symmetrized(std::move(m));
    const double tr = mat_.trace().real();
    if (std::abs(tr - 1.0) > tol::trace_one)
      throw std::invalid_argument("DensityMatrix: trace is " + std::to_string(tr) +
                                  ", expected 1");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(mat_,
                                                           Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success)
      throw std::runtime_error("DensityMatrix: eigensolver failed");
    if (solver.eigenvalues().minCoeff() < -tol::psd)
      throw std::invalid_argument("DensityMatrix: matrix has eigenvalue " +
                                  std::to_string(solver.eigenvalues().minCoeff()));
  }

  const Eigen::MatrixXcd& mat() const { return mat_; }
  Eigen::Index dim() const { return mat_.rows(); }

 private:
  Eigen::MatrixXcd mat_;
};

}  // namespace lrt
