#pragma once

#include <Eigen/Dense>
#include <bit>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "lrt/types.hpp"

namespace lrt {

/// One measured observable per qubit.
enum class Axis : std::uint8_t { X = 0, Y = 1, Z = 2 };

/// Extended single-qubit operator label; I marks an unmeasured tensor slot.
enum class PauliOp : std::uint8_t { I = 0, X = 1, Y = 2, Z = 3 };

using Setting = std::vector<Axis>;

inline char axis_char(Axis a) { return "xyz"[static_cast<int>(a)]; }

inline Axis axis_from_char(char c) {
  switch (c) {
    case 'x': return Axis::X;
    case 'y': return Axis::Y;
    case 'z': return Axis::Z;
    default: throw std::invalid_argument(std::string("invalid setting symbol '") + c + "'");
  }
}

inline std::string setting_to_string(const Setting& s) {
  std::string out;
  out.reserve(s.size());
  for (Axis a : s) out.push_back(axis_char(a));
  return out;
}

inline Setting setting_from_string(const std::string& str) {
  Setting s;
  s.reserve(str.size());
  for (char c : str) s.push_back(axis_from_char(c));
  return s;
}

inline void check_qubit_count(int k) {
  if (k < 1 || k > 10)
    throw std::invalid_argument("qubit count must be in [1, 10], got " +
                                std::to_string(k));
}

inline long long pow_ll(long long base, int exp) {
  long long out = 1;
  for (int i = 0; i < exp; ++i) out *= base;
  return out;
}

/// All 3^k settings in lexicographic order, x < y < z, qubit 0 most significant.
inline std::vector<Setting> enumerate_settings(int k) {
  check_qubit_count(k);
  const long long count = pow_ll(3, k);
  std::vector<Setting> settings;
  settings.reserve(static_cast<std::size_t>(count));
  for (long long idx = 0; idx < count; ++idx) {
    Setting s(static_cast<std::size_t>(k));
    long long rem = idx;
    for (int j = k - 1; j >= 0; --j) {
      s[static_cast<std::size_t>(j)] = static_cast<Axis>(rem % 3);
      rem /= 3;
    }
    settings.push_back(std::move(s));
  }
  return settings;
}

inline long long setting_index(const Setting& s) {
  long long idx = 0;
  for (Axis a : s) idx = idx * 3 + static_cast<long long>(a);
  return idx;
}

inline Setting setting_from_index(int k, long long idx) {
  Setting s(static_cast<std::size_t>(k));
  for (int j = k - 1; j >= 0; --j) {
    s[static_cast<std::size_t>(j)] = static_cast<Axis>(idx % 3);
    idx /= 3;
  }
  return s;
}

/// Outcome index: bit (k-1-j) of the index is 0 when qubit j reads +1.
/// This puts the 2^k outcomes in lexicographic order with +1 before -1.
inline int outcome_sign(int outcome_index, int qubit, int k) {
  return ((outcome_index >> (k - 1 - qubit)) & 1) ? -1 : +1;
}

inline std::vector<int> outcome_signs(int outcome_index, int k) {
  std::vector<int> o(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) o[static_cast<std::size_t>(j)] = outcome_sign(outcome_index, j, k);
  return o;
}

inline int outcome_index(const std::vector<int>& signs) {
  int idx = 0;
  for (int v : signs) idx = (idx << 1) | (v == -1 ? 1 : 0);
  return idx;
}

/// Tensor-product basis label b in {I,x,y,z}^k.
struct PauliLabel {
  std::vector<PauliOp> ops;

  int size() const { return static_cast<int>(ops.size()); }

  /// Number of identity slots of the label.
  int identity_count() const {
    int c = 0;
    for (PauliOp p : ops) c += (p == PauliOp::I);
    return c;
  }
};

/// Base-4 label index with digits I=0, x=1, y=2, z=3, qubit 0 most significant.
inline long long label_index(const PauliLabel& b) {
  long long idx = 0;
  for (PauliOp p : b.ops) idx = idx * 4 + static_cast<long long>(p);
  return idx;
}

inline PauliLabel label_from_index(int k, long long idx) {
  PauliLabel b;
  b.ops.resize(static_cast<std::size_t>(k));
  for (int j = k - 1; j >= 0; --j) {
    b.ops[static_cast<std::size_t>(j)] = static_cast<PauliOp>(idx % 4);
    idx /= 4;
  }
  return b;
}

/// Measurement design for k qubits: all settings and outcomes, in the fixed
/// orderings used throughout datasets and stacked probability vectors.
struct MeasurementDesign {
  int k = 0;
  int d = 0;
  std::vector<Setting> settings;
  std::vector<std::vector<int>> outcomes;

  static MeasurementDesign make(int k) {
    check_qubit_count(k);
    MeasurementDesign design;
    design.k = k;
    design.d = static_cast<int>(pow_ll(2, k));
    design.settings = enumerate_settings(k);
    design.outcomes.reserve(static_cast<std::size_t>(design.d));
    for (int o = 0; o < design.d; ++o) design.outcomes.push_back(outcome_signs(o, k));
    return design;
  }
};

/// Matrix element A_b(o|s) of the measurement map: the product of o_j over
/// measured slots where b_j = s_j, zero if any measured slot mismatches.
inline int pauli_coefficient(const PauliLabel& b, const std::vector<int>& o,
                             const Setting& s) {
  if (b.ops.size() != o.size() || o.size() != s.size())
    throw std::invalid_argument("pauli_coefficient: length mismatch");
  int value = 1;
  for (std::size_t j = 0; j < b.ops.size(); ++j) {
    if (b.ops[j] == PauliOp::I) continue;
    if (static_cast<int>(b.ops[j]) != static_cast<int>(s[j]) + 1) return 0;
    value *= o[j];
  }
  return value;
}

/// Diagonal Gram entry of the measurement map, 2^k * 3^(identity count).
inline long long gram_diagonal_entry(const PauliLabel& b, int k) {
  if (b.size() != k)
    throw std::invalid_argument("gram_diagonal_entry: label length mismatch");
  check_qubit_count(k);
  return pow_ll(2, k) * pow_ll(3, b.identity_count());
}

namespace detail {

inline const Eigen::Matrix2cd& pauli_matrix(PauliOp p) {
  static const Eigen::Matrix2cd mats[4] = {
      (Eigen::Matrix2cd() << 1, 0, 0, 1).finished(),
      (Eigen::Matrix2cd() << 0, 1, 1, 0).finished(),
      (Eigen::Matrix2cd() << 0, cxd(0, -1), cxd(0, 1), 0).finished(),
      (Eigen::Matrix2cd() << 1, 0, 0, -1).finished()};
  return mats[static_cast<int>(p)];
}

/// Columns are the +1 and -1 eigenvectors of the measured Pauli.
inline const Eigen::Matrix2cd& eigenbasis(Axis a) {
  static const double inv_sqrt2 = 0.7071067811865475244008443621;
  static const Eigen::Matrix2cd mats[3] = {
      (Eigen::Matrix2cd() << inv_sqrt2, inv_sqrt2, inv_sqrt2, -inv_sqrt2).finished(),
      (Eigen::Matrix2cd() << inv_sqrt2, inv_sqrt2, cxd(0, inv_sqrt2), cxd(0, -inv_sqrt2))
          .finished(),
      (Eigen::Matrix2cd() << 1, 0, 0, 1).finished()};
  return mats[static_cast<int>(a)];
}

inline Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

/// In-place conjugation rho <- (I (x) U^dag (x) I) rho (I (x) U (x) I)
/// acting on one qubit slot; O(d^2) per call.
inline void conjugate_single_qubit(Eigen::MatrixXcd& rho, const Eigen::Matrix2cd& u,
                                   int qubit, int k) {
  const Eigen::Index d = rho.rows();
  const int shift = k - 1 - qubit;
  const Eigen::Index mask = Eigen::Index(1) << shift;
  const cxd u00 = u(0, 0), u01 = u(0, 1), u10 = u(1, 0), u11 = u(1, 1);
  // Rows: left-multiply by U^dag.
  for (Eigen::Index i0 = 0; i0 < d; ++i0) {
    if (i0 & mask) continue;
    const Eigen::Index i1 = i0 | mask;
    for (Eigen::Index c = 0; c < d; ++c) {
      const cxd a = rho(i0, c), b = rho(i1, c);
      rho(i0, c) = std::conj(u00) * a + std::conj(u10) * b;
      rho(i1, c) = std::conj(u01) * a + std::conj(u11) * b;
    }
  }
  // Columns: right-multiply by U.
  for (Eigen::Index j0 = 0; j0 < d; ++j0) {
    if (j0 & mask) continue;
    const Eigen::Index j1 = j0 | mask;
    for (Eigen::Index r = 0; r < d; ++r) {
      const cxd a = rho(r, j0), b = rho(r, j1);
      rho(r, j0) = a * u00 + b * u10;
      rho(r, j1) = a * u01 + b * u11;
    }
  }
}

}  // namespace detail

/// Dense d x d matrix of the tensor-product basis element sigma_b.
inline Eigen::MatrixXcd pauli_basis_matrix(const PauliLabel& b) {
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Ones(1, 1);
  for (PauliOp p : b.ops) out = detail::kron(out, detail::pauli_matrix(p));
  return out;
}

/// Real expansion coefficients of a Hermitian matrix over the 4^k basis
/// elements, values[b] = Tr(rho sigma_b) / d.
struct PauliCoefficients {
  int k = 0;
  Eigen::VectorXd values;
};

inline PauliCoefficients state_to_pauli_coeffs(const Eigen::MatrixXcd& rho) {
  const Eigen::Index d = rho.rows();
  if (rho.cols() != d) throw std::invalid_argument("state_to_pauli_coeffs: not square");
  int k = 0;
  while ((Eigen::Index(1) << k) < d) ++k;
  if ((Eigen::Index(1) << k) != d)
    throw std::invalid_argument("state_to_pauli_coeffs: dimension is not a power of 2");
  check_qubit_count(k);
  if (max_abs(rho - rho.adjoint()) > 1e-10)
    throw std::invalid_argument("state_to_pauli_coeffs: matrix is not Hermitian");

  const long long labels = pow_ll(4, k);
  PauliCoefficients coeffs;
  coeffs.k = k;
  coeffs.values.resize(labels);
  for (long long bi = 0; bi < labels; ++bi) {
    // sigma_b has one nonzero per row; walk it instead of materializing.
    long long rem = bi;
    int digits[10];
    for (int j = k - 1; j >= 0; --j) {
      digits[j] = static_cast<int>(rem % 4);
      rem /= 4;
    }
    Eigen::Index flip = 0;
    for (int j = 0; j < k; ++j)
      if (digits[j] == 1 || digits[j] == 2) flip |= Eigen::Index(1) << (k - 1 - j);
    cxd trace(0, 0);
    for (Eigen::Index row = 0; row < d; ++row) {
      const Eigen::Index col = row ^ flip;
      cxd entry(1, 0);
      for (int j = 0; j < k; ++j) {
        const int rb = static_cast<int>((row >> (k - 1 - j)) & 1);
        switch (digits[j]) {
          case 0: break;                                        // I
          case 1: break;                                        // x: entry 1
          case 2: entry *= rb ? cxd(0, 1) : cxd(0, -1); break;  // y
          case 3: entry *= rb ? -1.0 : 1.0; break;              // z
        }
      }
      trace += entry * rho(col, row);
    }
    coeffs.values(bi) = trace.real() / static_cast<double>(d);
  }
  return coeffs;
}

/// Inverse of state_to_pauli_coeffs: rho = sum_b values[b] sigma_b.
inline Eigen::MatrixXcd matrix_from_pauli_coeffs(const PauliCoefficients& coeffs) {
  const int k = coeffs.k;
  const Eigen::Index d = Eigen::Index(1) << k;
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(d, d);
  const long long labels = pow_ll(4, k);
  for (long long bi = 0; bi < labels; ++bi) {
    const double c = coeffs.values(bi);
    if (c == 0.0) continue;
    rho += c * pauli_basis_matrix(label_from_index(k, bi));
  }
  return rho;
}

/// Stacked outcome distribution, settings-major: entry s * 2^k + o.
struct ProbabilityVector {
  int k = 0;
  Eigen::VectorXd stacked;

  Eigen::Index outcomes_per_setting() const { return Eigen::Index(1) << k; }
  Eigen::VectorXd per_setting(long long setting_idx) const {
    const Eigen::Index block = outcomes_per_setting();
    return stacked.segment(setting_idx * block, block);
  }
};

/// Outcome distribution of one setting, computed by rotating the state into
/// the setting eigenbasis one qubit at a time; O(k d^2).
inline Eigen::VectorXd probabilities(const DensityMatrix& rho, const Setting& s) {
  const int k = static_cast<int>(s.size());
  check_qubit_count(k);
  if (rho.dim() != (Eigen::Index(1) << k))
    throw std::invalid_argument("probabilities: setting length does not match state");
  Eigen::MatrixXcd work = rho.mat();
  for (int j = 0; j < k; ++j)
    detail::conjugate_single_qubit(work, detail::eigenbasis(s[static_cast<std::size_t>(j)]), j, k);
  return work.diagonal().real();
}

/// Reference implementation via projector traces; O(d^2) per outcome.
inline Eigen::VectorXd probabilities_direct(const DensityMatrix& rho, const Setting& s) {
  const int k = static_cast<int>(s.size());
  const Eigen::Index d = Eigen::Index(1) << k;
  Eigen::VectorXd p(d);
  for (Eigen::Index o = 0; o < d; ++o) {
    Eigen::VectorXcd basis_vec = Eigen::VectorXcd::Ones(1);
    for (int j = 0; j < k; ++j) {
      const Eigen::Matrix2cd& eb = detail::eigenbasis(s[static_cast<std::size_t>(j)]);
      const int bit = static_cast<int>((o >> (k - 1 - j)) & 1);
      Eigen::VectorXcd next(basis_vec.size() * 2);
      for (Eigen::Index i = 0; i < basis_vec.size(); ++i) {
        next(2 * i) = basis_vec(i) * eb(0, bit);
        next(2 * i + 1) = basis_vec(i) * eb(1, bit);
      }
      basis_vec.swap(next);
    }
    p(o) = (basis_vec.adjoint() * rho.mat() * basis_vec)(0, 0).real();
  }
  return p;
}

/// Stacked probabilities for every setting.
inline ProbabilityVector probabilities_all(const DensityMatrix& rho) {
  int k = 0;
  while ((Eigen::Index(1) << k) < rho.dim()) ++k;
  const auto settings = enumerate_settings(k);
  const Eigen::Index block = Eigen::Index(1) << k;
  ProbabilityVector pv;
  pv.k = k;
  pv.stacked.resize(static_cast<Eigen::Index>(settings.size()) * block);
  for (std::size_t si = 0; si < settings.size(); ++si)
    pv.stacked.segment(static_cast<Eigen::Index>(si) * block, block) =
        probabilities(rho, settings[si]);
  return pv;
}

/// Applies the measurement map: p(o|s) = sum_b coeffs[b] A_b(o|s).
/// For a fixed setting only labels with b_j in {I, s_j} contribute, so the
/// sum runs over the 2^k measured-slot subsets.
inline ProbabilityVector forward_map(const PauliCoefficients& coeffs) {
  const int k = coeffs.k;
  check_qubit_count(k);
  const long long expected = pow_ll(4, k);
  if (coeffs.values.size() != expected)
    throw std::invalid_argument("forward_map: coefficient vector has wrong length");
  const long long n_settings = pow_ll(3, k);
  const int block = 1 << k;

  ProbabilityVector pv;
  pv.k = k;
  pv.stacked = Eigen::VectorXd::Zero(n_settings * block);
  for (long long si = 0; si < n_settings; ++si) {
    int axes[10];
    long long rem = si;
    for (int j = k - 1; j >= 0; --j) {
      axes[j] = static_cast<int>(rem % 3);
      rem /= 3;
    }
    for (int subset = 0; subset < block; ++subset) {
      long long bi = 0;
      for (int j = 0; j < k; ++j) {
        const bool measured = (subset >> (k - 1 - j)) & 1;
        bi = bi * 4 + (measured ? axes[j] + 1 : 0);
      }
      const double c = coeffs.values(bi);
      if (c == 0.0) continue;
      for (int o = 0; o < block; ++o) {
        const int sign = std::popcount(static_cast<unsigned>(subset & o)) & 1 ? -1 : 1;
        pv.stacked(si * block + o) += sign * c;
      }
    }
  }
  return pv;
}

namespace detail {

/// kernel (x)_j (I/6 + o_j sigma_{s_j}/2); summing weight * kernel over all
/// (o, s) inverts the measurement map.
inline Eigen::MatrixXcd inversion_kernel(int k, const Setting& s, Eigen::Index o) {
  Eigen::MatrixXcd kernel = Eigen::MatrixXcd::Ones(1, 1);
  for (int j = 0; j < k; ++j) {
    const double sign = outcome_sign(static_cast<int>(o), j, k);
    const Eigen::Matrix2cd factor =
        Eigen::Matrix2cd::Identity() / 6.0 +
        (sign / 2.0) * pauli_matrix(static_cast<PauliOp>(
                           static_cast<int>(s[static_cast<std::size_t>(j)]) + 1));
    kernel = kron(kernel, factor);
  }
  return kernel;
}

/// Precomputed kernels for small k (about 5 MB at k = 4); larger systems
/// build kernels on the fly.
inline const std::vector<Eigen::MatrixXcd>* inversion_kernel_table(int k) {
  constexpr int max_cached_k = 4;
  if (k < 1 || k > max_cached_k) return nullptr;
  static const auto tables = [] {
    std::array<std::vector<Eigen::MatrixXcd>, max_cached_k + 1> out;
    for (int kk = 1; kk <= max_cached_k; ++kk) {
      const long long n_settings = pow_ll(3, kk);
      const Eigen::Index block = Eigen::Index(1) << kk;
      out[static_cast<std::size_t>(kk)].reserve(
          static_cast<std::size_t>(n_settings * block));
      for (long long si = 0; si < n_settings; ++si) {
        const Setting s = setting_from_index(kk, si);
        for (Eigen::Index o = 0; o < block; ++o)
          out[static_cast<std::size_t>(kk)].push_back(inversion_kernel(kk, s, o));
      }
    }
    return out;
  }();
  return &tables[static_cast<std::size_t>(k)];
}

}  // namespace detail

/// Explicit inverse of the measurement map applied to a stacked probability
/// (or frequency) vector. Accepts arbitrary vectors; the result is Hermitian.
inline HermitianEstimate reconstruct_from_probabilities(const ProbabilityVector& p) {
  const int k = p.k;
  check_qubit_count(k);
  const long long n_settings = pow_ll(3, k);
  const Eigen::Index block = Eigen::Index(1) << k;
  if (p.stacked.size() != n_settings * block)
    throw std::invalid_argument("reconstruct_from_probabilities: wrong vector length");
  const Eigen::Index d = block;

  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(d, d);
  if (const auto* table = detail::inversion_kernel_table(k)) {
    for (Eigen::Index i = 0; i < p.stacked.size(); ++i) {
      const double weight = p.stacked(i);
      if (weight != 0.0) rho.noalias() += weight * (*table)[static_cast<std::size_t>(i)];
    }
    return rho;
  }
  for (long long si = 0; si < n_settings; ++si) {
    const Setting s = setting_from_index(k, si);
    for (Eigen::Index o = 0; o < block; ++o) {
      const double weight = p.stacked(si * block + o);
      if (weight == 0.0) continue;
      rho += weight * detail::inversion_kernel(k, s, o);
    }
  }
  return rho;
}

}  // namespace lrt
