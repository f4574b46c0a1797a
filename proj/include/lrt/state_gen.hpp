#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "lrt/rng.hpp"
#include "lrt/types.hpp"

namespace lrt {

struct StateSpec {
  int d = 0;
  int r = 0;
  std::uint64_t seed = 0;
};

/// Count of eigenvalues above tol.
inline int numerical_rank(const Eigen::MatrixXcd& rho, double tol) {
  if (tol <= 0.0) throw std::invalid_argument("numerical_rank: tol must be positive");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(symmetrized(rho),
                                                         Eigen::EigenvaluesOnly);
  return static_cast<int>((solver.eigenvalues().array() > tol).count());
}

/// Random rank-r density matrix rho = T^dag T from an upper-triangular factor
/// whose first r rows carry random complex off-diagonals (scale 1/d) and
/// positive diagonals (uniform(0.1, 1)/sqrt(r)); rows r+1..d are zero. T_11
/// absorbs the slack so that ||T||_2 = 1, redrawing whenever the slack is
/// negative.
inline DensityMatrix random_rank_r_state(const StateSpec& spec) {
  const int d = spec.d;
  const int r = spec.r;
  if (d < 1) throw std::invalid_argument("random_rank_r_state: d must be >= 1");
  if (r < 1 || r > d)
    throw std::invalid_argument("random_rank_r_state: rank must be in [1, d]");

  rng::Xoshiro256pp gen(spec.seed);
  const double inv_sqrt2 = 0.7071067811865475244008443621;
  const double diag_scale = 1.0 / std::sqrt(static_cast<double>(r));

  constexpr int max_retries = 1000;
  for (int attempt = 0; attempt < max_retries; ++attempt) {
    Eigen::MatrixXcd t = Eigen::MatrixXcd::Zero(d, d);
    for (int i = 0; i < r; ++i) {
      if (i > 0) t(i, i) = rng::uniform(gen, 0.1, 1.0) * diag_scale;
      for (int j = i + 1; j < d; ++j)
        t(i, j) = cxd(rng::gaussian(gen) * inv_sqrt2, rng::gaussian(gen) * inv_sqrt2) /
                  static_cast<double>(d);
    }
    const double other_mass = t.squaredNorm();
    if (other_mass > 1.0) continue;
    t(0, 0) = std::sqrt(1.0 - other_mass);
    Eigen::MatrixXcd rho = t.adjoint() * t;
    return DensityMatrix(symmetrized(rho));
  }
  throw std::runtime_error(
      "random_rank_r_state: retry budget exhausted while solving for T_11");
}

}  // namespace lrt
