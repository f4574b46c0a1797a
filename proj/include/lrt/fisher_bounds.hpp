#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "lrt/rng.hpp"
#include "lrt/types.hpp"

namespace lrt {

/// Index map for the d^2 real parameters of a density matrix:
/// the d diagonals first, then Re rho_ij for i<j row-major, then Im rho_ij.
struct ParamIndexer {
  int d = 0;

  explicit ParamIndexer(int dim) : d(dim) {
    if (dim < 1) throw std::invalid_argument("ParamIndexer: d must be >= 1");
  }

  int dim() const { return d * d; }
  int off_pairs() const { return d * (d - 1) / 2; }

  int pair_index(int i, int j) const {
    if (!(0 <= i && i < j && j < d))
      throw std::invalid_argument("ParamIndexer: need 0 <= i < j < d");
    return i * d - i * (i + 1) / 2 + (j - i - 1);
  }

  int diag(int i) const { return i; }
  int re(int i, int j) const { return d + pair_index(i, j); }
  int im(int i, int j) const { return d + off_pairs() + pair_index(i, j); }
};

/// Classical Fisher information of the von Neumann measurement in the basis
/// given by the columns of U, with respect to the matrix-element
/// parametrization above. Outcomes with probability <= 1e-12 are skipped.
inline Eigen::MatrixXd fisher_info_basis(const DensityMatrix& rho,
                                         const Eigen::MatrixXcd& basis) {
  const Eigen::Index d = rho.dim();
  if (basis.rows() != d || basis.cols() != d)
    throw std::invalid_argument("fisher_info_basis: basis dimension mismatch");
  if (max_abs(basis.adjoint() * basis - Eigen::MatrixXcd::Identity(d, d)) > 1e-10)
    throw std::invalid_argument("fisher_info_basis: basis matrix is not unitary");

  const ParamIndexer idx(static_cast<int>(d));
  Eigen::MatrixXd info = Eigen::MatrixXd::Zero(idx.dim(), idx.dim());
  Eigen::VectorXd grad(idx.dim());
  for (Eigen::Index o = 0; o < d; ++o) {
    const Eigen::VectorXcd u = basis.col(o);
    const double p = (u.adjoint() * rho.mat() * u)(0, 0).real();
    if (p <= 1e-12) continue;
    for (int i = 0; i < d; ++i) grad(idx.diag(i)) = std::norm(u(i));
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j) {
        const cxd w = u(i) * std::conj(u(j));  // <i|o,U><o,U|j>
        grad(idx.re(i, j)) = 2.0 * w.real();
        grad(idx.im(i, j)) = 2.0 * w.imag();
      }
    info.noalias() += (grad * grad.transpose()) / p;
  }
  return info;
}

/// Haar-distributed random unitary: QR of a complex Ginibre matrix with the
/// R-diagonal phases absorbed into Q.
inline Eigen::MatrixXcd haar_unitary(int d, std::uint64_t seed) {
  if (d < 1) throw std::invalid_argument("haar_unitary: d must be >= 1");
  rng::Xoshiro256pp gen(seed);
  const double inv_sqrt2 = 0.7071067811865475244008443621;
  Eigen::MatrixXcd g(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      g(i, j) = cxd(rng::gaussian(gen) * inv_sqrt2, rng::gaussian(gen) * inv_sqrt2);
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(g);
  Eigen::MatrixXcd q = qr.householderQ();
  for (int j = 0; j < d; ++j) {
    const cxd r_jj = qr.matrixQR()(j, j);
    const double mag = std::abs(r_jj);
    q.col(j) *= (mag > 0.0) ? r_jj / mag : cxd(1, 0);
  }
  return q;
}

inline void check_fisher_rank(int d, int r) {
  if (d < 2) throw std::invalid_argument("average Fisher: d must be >= 2");
  if (r > d) throw std::invalid_argument("average Fisher: r must be <= d");
  if (r < 2)
    throw std::invalid_argument(
        "average Fisher: r = 1 is unsupported, the closed forms contain "
        "2r/(r-1) and the corresponding integrals diverge");
}

struct MonteCarloFisher {
  Eigen::MatrixXd mean;
  Eigen::MatrixXd std_error;
  long long samples = 0;
};

/// Monte Carlo average of the basis Fisher information at the reference state
/// Diag(1/r, ..., 1/r, 0, ..., 0) over Haar random bases, with per-entry
/// standard errors. Sample i uses seed mix(seed, i), so a parallel version
/// could accumulate deterministically; this implementation is serial and
/// bit-exact for a given seed.
inline MonteCarloFisher avg_fisher_mc(int d, int r, long long samples,
                                      std::uint64_t seed) {
  check_fisher_rank(d, r);
  if (samples < 2) throw std::invalid_argument("avg_fisher_mc: need >= 2 samples");

  Eigen::MatrixXcd rho0 = Eigen::MatrixXcd::Zero(d, d);
  for (int i = 0; i < r; ++i) rho0(i, i) = 1.0 / static_cast<double>(r);
  const DensityMatrix state(rho0);

  const int dim = d * d;
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::MatrixXd sum_sq = Eigen::MatrixXd::Zero(dim, dim);
  for (long long i = 0; i < samples; ++i) {
    const Eigen::MatrixXd info =
        fisher_info_basis(state, haar_unitary(d, rng::mix(seed, static_cast<std::uint64_t>(i))));
    sum += info;
    sum_sq += info.cwiseProduct(info);
  }

  MonteCarloFisher out;
  out.samples = samples;
  out.mean = sum / static_cast<double>(samples);
  const Eigen::MatrixXd variance =
      (sum_sq / static_cast<double>(samples) - out.mean.cwiseProduct(out.mean)) *
      (static_cast<double>(samples) / static_cast<double>(samples - 1));
  out.std_error = (variance.cwiseMax(0.0) / static_cast<double>(samples)).cwiseSqrt();
  return out;
}

/// The cross-region off-diagonal entries of the diagonal-diagonal block have
/// two candidate closed forms: the tabulated r/(r+1) and the value 1 produced
/// by the direct region-by-region integral. `fisher-check` compares both
/// against the Monte Carlo average and reports which one it supports.
enum class DdCrossConvention { tabulated, unit };

/// Closed-form Haar-averaged Fisher information at Diag(1/r,...,1/r,0,...,0).
/// All cross blocks vanish; the Re/Im blocks are diagonal with region values
/// 2r/(r+1), 2, 2r/(r-1); the diagonal block mixes regions as tabulated.
inline Eigen::MatrixXd closed_form_avg_fisher(
    int d, int r, DdCrossConvention convention = DdCrossConvention::tabulated) {
  check_fisher_rank(d, r);
  const ParamIndexer idx(d);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(idx.dim(), idx.dim());
  const double rd = static_cast<double>(r);
  const double low = 2.0 * rd / (rd + 1.0);   // both indices inside the rank block
  const double mid = 2.0;                     // one inside, one outside
  const double high = 2.0 * rd / (rd - 1.0);  // both outside

  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      const double v = (j < r) ? low : (i < r ? mid : high);
      out(idx.re(i, j), idx.re(i, j)) = v;
      out(idx.im(i, j), idx.im(i, j)) = v;
    }

  const double dd_cross_mixed =
      (convention == DdCrossConvention::tabulated) ? rd / (rd + 1.0) : 1.0;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      double v = 0.0;
      if (i == j)
        v = (i < r) ? low : high;
      else if (i < r && j < r)
        v = rd / (rd + 1.0);
      else if (i >= r && j >= r)
        v = rd / (rd - 1.0);
      else
        v = dd_cross_mixed;
      out(idx.diag(i), idx.diag(j)) = v;
    }
  return out;
}

/// Rows and columns of the Re/Im off-diagonal parameters with i <= r < j,
/// sliced out of a full Fisher matrix. These parametrize small rotations of
/// the reference state; in the Haar-averaged closed form the block equals
/// 2 * identity of size 2 r (d - r), which is what the minimax bound rests
/// on.
inline Eigen::MatrixXd rotation_block(const Eigen::MatrixXd& fisher, int d, int r) {
  const ParamIndexer idx(d);
  if (fisher.rows() != idx.dim() || fisher.cols() != idx.dim())
    throw std::invalid_argument("rotation_block: Fisher matrix size does not match d");
  if (r < 1 || r > d) throw std::invalid_argument("rotation_block: need 1 <= r <= d");
  std::vector<int> sel;
  sel.reserve(2 * static_cast<std::size_t>(r) * static_cast<std::size_t>(d - r));
  for (int i = 0; i < r; ++i)
    for (int j = r; j < d; ++j) sel.push_back(idx.re(i, j));
  for (int i = 0; i < r; ++i)
    for (int j = r; j < d; ++j) sel.push_back(idx.im(i, j));
  Eigen::MatrixXd out(sel.size(), sel.size());
  for (std::size_t a = 0; a < sel.size(); ++a)
    for (std::size_t b = 0; b < sel.size(); ++b)
      out(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
          fisher(sel[a], sel[b]);
  return out;
}

/// Asymptotic minimax lower bound 2 r (d - r) for the rescaled risk over
/// rank-r states.
inline double minimax_bound(int d, int r) {
  if (d < 1 || r < 1 || r > d)
    throw std::invalid_argument("minimax_bound: need 1 <= r <= d");
  return 2.0 * static_cast<double>(r) * static_cast<double>(d - r);
}

}  // namespace lrt
