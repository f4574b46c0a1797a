#pragma once

// Test-only random matrix helpers. Deliberately independent of the library's
// state generator and Haar sampler so cross-checks stay meaningful.

#include <Eigen/Dense>
#include <complex>
#include <cstdint>

#include "lrt/rng.hpp"

namespace testutil {

inline Eigen::MatrixXcd random_complex_gaussian(int rows, int cols, std::uint64_t seed) {
  lrt::rng::Xoshiro256pp gen(seed);
  Eigen::MatrixXcd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      m(i, j) = std::complex<double>(lrt::rng::gaussian(gen), lrt::rng::gaussian(gen));
  return m;
}

inline Eigen::MatrixXcd random_hermitian(int d, std::uint64_t seed) {
  Eigen::MatrixXcd g = random_complex_gaussian(d, d, seed);
  return 0.5 * (g + g.adjoint());
}

/// Full-rank random density matrix, G G^dag normalized to unit trace.
inline Eigen::MatrixXcd random_density(int d, std::uint64_t seed) {
  Eigen::MatrixXcd g = random_complex_gaussian(d, d, seed);
  Eigen::MatrixXcd m = g * g.adjoint();
  return m / m.trace().real();
}

/// Rank-r random density matrix from a d x r Gaussian factor.
inline Eigen::MatrixXcd random_density_rank(int d, int r, std::uint64_t seed) {
  Eigen::MatrixXcd g = random_complex_gaussian(d, r, seed);
  Eigen::MatrixXcd m = g * g.adjoint();
  return m / m.trace().real();
}

/// Random unitary via QR of a Gaussian matrix with phase-corrected R diagonal.
inline Eigen::MatrixXcd random_unitary(int d, std::uint64_t seed) {
  Eigen::MatrixXcd g = random_complex_gaussian(d, d, seed);
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(g);
  Eigen::MatrixXcd q = qr.householderQ();
  Eigen::MatrixXcd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < d; ++j) {
    std::complex<double> diag = r(j, j);
    const double mag = std::abs(diag);
    q.col(j) *= (mag > 0) ? diag / mag : std::complex<double>(1, 0);
  }
  return q;
}

/// Density matrix with a prescribed spectrum and random eigenbasis.
inline Eigen::MatrixXcd density_with_spectrum(const Eigen::VectorXd& spectrum,
                                              std::uint64_t seed) {
  const int d = static_cast<int>(spectrum.size());
  Eigen::MatrixXcd u = random_unitary(d, seed);
  return u * spectrum.asDiagonal() * u.adjoint();
}

}  // namespace testutil
