#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "lrt/pauli_model.hpp"
#include "lrt/sampler.hpp"
#include "lrt/types.hpp"

namespace lrt {

/// High-probability operator-norm bound on the least-squares error; the
/// threshold unit for every spectral estimator.
///
/// nu^2 = (2/n) (2/3)^k ln(2^(k+1)/eps) = (2d/N) ln(2d/eps), N = n 3^k.
/// The exact Bernstein-tail threshold solves t^2/(1 + 2t/3) = (3/2) nu^2 and
/// is slightly larger; the closed form above is the operating definition.
struct NoiseLevel {
  double epsilon = 0.0;
  double nu_squared = 0.0;
  double nu = 0.0;
};

inline NoiseLevel noise_level(int k, long long n, double epsilon) {
  check_qubit_count(k);
  if (n < 1) throw std::invalid_argument("noise_level: n must be >= 1");
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw std::invalid_argument("noise_level: epsilon must be in (0, 1)");
  NoiseLevel out;
  out.epsilon = epsilon;
  out.nu_squared = (2.0 / static_cast<double>(n)) * std::pow(2.0 / 3.0, k) *
                   std::log(std::pow(2.0, k + 1) / epsilon);
  out.nu = std::sqrt(out.nu_squared);
  return out;
}

/// Plug-in estimator: the inverse measurement map applied to empirical
/// frequencies. Hermitian, generally neither positive nor trace one.
inline HermitianEstimate least_squares(const CountsDataset& data) {
  return reconstruct_from_probabilities(stacked_frequencies(data));
}

/// Closest trace-one Hermitian matrix: shifts every eigenvalue by
/// (1 - tr M)/d, leaving eigenvectors untouched.
inline HermitianEstimate trace_normalize(const HermitianEstimate& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("trace_normalize: not square");
  const double shift = (1.0 - m.trace().real()) / static_cast<double>(m.rows());
  return m + shift * Eigen::MatrixXcd::Identity(m.rows(), m.cols());
}

/// Eigenvalues sorted by absolute value, descending, with matched orthonormal
/// eigenvector columns. Ties by larger signed value, then solver order.
struct SpectralDecomposition {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXcd eigenvectors;

  Eigen::Index dim() const { return eigenvalues.size(); }

  Eigen::MatrixXcd reconstruct() const {
    return eigenvectors * eigenvalues.asDiagonal() * eigenvectors.adjoint();
  }
};

inline SpectralDecomposition spectral_decompose(const HermitianEstimate& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("spectral_decompose: not square");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(symmetrized(m));
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("spectral_decompose: eigensolver failed");

  const Eigen::Index d = m.rows();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), 0);
  const Eigen::VectorXd& ev = solver.eigenvalues();
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    const double fa = std::abs(ev(a)), fb = std::abs(ev(b));
    if (fa != fb) return fa > fb;
    return ev(a) > ev(b);
  });

  SpectralDecomposition out;
  out.eigenvalues.resize(d);
  out.eigenvectors.resize(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    out.eigenvalues(i) = ev(order[static_cast<std::size_t>(i)]);
    out.eigenvectors.col(i) = solver.eigenvectors().col(order[static_cast<std::size_t>(i)]);
  }
  return out;
}

/// Best Frobenius approximation of rank <= kappa: keep the kappa eigenvalues
/// of largest absolute value. kappa = 0 gives the zero matrix.
inline HermitianEstimate truncate_rank(const SpectralDecomposition& dec, int kappa) {
  const Eigen::Index d = dec.dim();
  if (kappa < 0 || kappa > d)
    throw std::invalid_argument("truncate_rank: rank out of [0, d]");
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(d, d);
  for (int i = 0; i < kappa; ++i)
    out += dec.eigenvalues(i) *
           (dec.eigenvectors.col(i) * dec.eigenvectors.col(i).adjoint());
  return out;
}

inline HermitianEstimate truncate_rank(const HermitianEstimate& m, int kappa) {
  return truncate_rank(spectral_decompose(m), kappa);
}

struct PenalisedResult {
  HermitianEstimate estimate;
  int rank = 0;
};

/// Rank-penalised estimator: zero every eigenvalue with lambda^2 < nu^2.
/// Equivalently the minimizer over kappa of
///   sum_{i > kappa} lambda_i^2 + nu^2 kappa,
/// with rank 0 (zero matrix) when no eigenvalue clears the threshold.
inline PenalisedResult penalised(const SpectralDecomposition& dec, double nu) {
  if (nu < 0.0) throw std::invalid_argument("penalised: nu must be >= 0");
  int kept = 0;
  while (kept < dec.dim() &&
         dec.eigenvalues(kept) * dec.eigenvalues(kept) >= nu * nu)
    ++kept;
  return {truncate_rank(dec, kept), kept};
}

inline PenalisedResult penalised(const HermitianEstimate& m, double nu) {
  return penalised(spectral_decompose(m), nu);
}

/// Rank-penalised estimate projected back onto trace one; the shift spreads
/// over all d eigenvalues.
inline HermitianEstimate penalised_normalized(const HermitianEstimate& m, double nu) {
  return trace_normalize(penalised(m, nu).estimate);
}

struct PhysicalResult {
  DensityMatrix estimate;
  int rank = 0;
};

/// Eigenvalue half of the physical projection. Input must be sorted in
/// signed descending order and sum to one; while the smallest retained value
/// sits at or below 4*nu it is zeroed and the missing mass is spread evenly
/// over the survivors. If the loop would erase the last value it is set to
/// one instead. Returns the modified values and the retained count.
inline std::pair<Eigen::VectorXd, int> threshold_eigenvalues(Eigen::VectorXd lam,
                                                             double nu) {
  if (nu < 0.0) throw std::invalid_argument("threshold_eigenvalues: nu must be >= 0");
  const double threshold = 4.0 * nu;
  Eigen::Index retained = lam.size();
  while (retained > 1 && lam(retained - 1) <= threshold) {
    lam(retained - 1) = 0.0;
    --retained;
    const double missing = 1.0 - lam.head(retained).sum();
    lam.head(retained).array() += missing / static_cast<double>(retained);
  }
  if (retained == 1) lam(0) = 1.0;  // a state must carry unit mass
  return {std::move(lam), static_cast<int>(retained)};
}

/// Eigenvalues in signed descending order with matching eigenvector columns.
inline std::pair<Eigen::VectorXd, Eigen::MatrixXcd> signed_eigensystem(
    const HermitianEstimate& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(symmetrized(m));
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("signed_eigensystem: eigensolver failed");
  const Eigen::Index d = m.rows();
  Eigen::VectorXd lam(d);
  Eigen::MatrixXcd vec(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    lam(i) = solver.eigenvalues()(d - 1 - i);
    vec.col(i) = solver.eigenvectors().col(d - 1 - i);
  }
  return {std::move(lam), std::move(vec)};
}

/// Closest density matrix to the trace-normalized least squares estimate
/// whose nonzero eigenvalues exceed 4*nu; eigenvectors never change.
/// Expects a trace-one Hermitian input.
inline PhysicalResult physical_threshold(const HermitianEstimate& m, double nu) {
  auto [lam, vec] = signed_eigensystem(m);
  auto [values, rank] = threshold_eigenvalues(std::move(lam), nu);
  const Eigen::Index d = m.rows();
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(d, d);
  for (int i = 0; i < rank; ++i)
    out += values(i) * (vec.col(i) * vec.col(i).adjoint());
  return {DensityMatrix(symmetrized(out)), rank};
}

struct OracleResult {
  HermitianEstimate estimate;
  int rank = 0;
};

/// Truncation rank chosen against the true state; a simulation benchmark.
/// Smallest rank wins among truncations whose errors tie within rounding.
inline OracleResult oracle_truncation(const HermitianEstimate& m,
                                      const DensityMatrix& rho_true) {
  if (m.rows() != rho_true.dim())
    throw std::invalid_argument("oracle_truncation: dimension mismatch");
  const SpectralDecomposition dec = spectral_decompose(m);
  const int d = static_cast<int>(dec.dim());
  std::vector<double> err(static_cast<std::size_t>(d) + 1, 0.0);
  double best = std::numeric_limits<double>::infinity();
  for (int kappa = 1; kappa <= d; ++kappa) {
    err[static_cast<std::size_t>(kappa)] =
        frobenius_error_sq(rho_true.mat(), truncate_rank(dec, kappa));
    best = std::min(best, err[static_cast<std::size_t>(kappa)]);
  }
  const double tie_tol = 1e-12 + 1e-9 * best;
  for (int kappa = 1; kappa <= d; ++kappa)
    if (err[static_cast<std::size_t>(kappa)] <= best + tie_tol)
      return {truncate_rank(dec, kappa), kappa};
  throw std::logic_error("oracle_truncation: unreachable");
}

}  // namespace lrt
