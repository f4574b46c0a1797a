#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "lrt/pauli_model.hpp"
#include "lrt/rng.hpp"
#include "lrt/types.hpp"

namespace lrt {

/// Counts table with one row per setting (3^k rows) and one column per
/// outcome (2^k columns); every row sums to the repetition count n.
struct CountsDataset {
  int k = 0;
  long long n = 0;
  Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic> counts;
};

/// Counts divided by n; rows sum to one.
struct FrequencyTable {
  int k = 0;
  long long n = 0;
  Eigen::MatrixXd table;
};

namespace detail {

/// n inverse-CDF categorical draws from one outcome distribution.
inline Eigen::Matrix<long long, Eigen::Dynamic, 1> sample_row(const Eigen::VectorXd& probs,
                                                              long long n,
                                                              std::uint64_t seed) {
  const Eigen::Index m = probs.size();
  Eigen::VectorXd cumulative(m);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    acc += std::max(probs(i), 0.0);  // clip rounding-level negatives
    cumulative(i) = acc;
  }
  rng::Xoshiro256pp gen(seed);
  Eigen::Matrix<long long, Eigen::Dynamic, 1> row =
      Eigen::Matrix<long long, Eigen::Dynamic, 1>::Zero(m);
  for (long long draw = 0; draw < n; ++draw) {
    const double u = rng::uniform01(gen) * acc;
    Eigen::Index lo = 0, hi = m - 1;
    while (lo < hi) {
      const Eigen::Index mid = (lo + hi) / 2;
      if (u < cumulative(mid))
        hi = mid;
      else
        lo = mid + 1;
    }
    ++row(lo);
  }
  return row;
}

}  // namespace detail

/// Draws each setting row independently as Multinomial(n, p(.|s)).
/// Row order cannot affect results: row s uses the substream seed
/// mix(seed, s), so settings may even be sampled in parallel.
inline CountsDataset simulate_dataset(const DensityMatrix& rho, long long n,
                                      std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("simulate_dataset: n must be >= 1");
  int k = 0;
  while ((Eigen::Index(1) << k) < rho.dim()) ++k;
  check_qubit_count(k);
  const long long n_settings = pow_ll(3, k);
  const Eigen::Index block = Eigen::Index(1) << k;

  CountsDataset data;
  data.k = k;
  data.n = n;
  data.counts.resize(n_settings, block);
  for (long long si = 0; si < n_settings; ++si) {
    const Eigen::VectorXd p = probabilities(rho, setting_from_index(k, si));
    data.counts.row(si) =
        detail::sample_row(p, n, rng::mix(seed, static_cast<std::uint64_t>(si))).transpose();
  }
  return data;
}

/// B independent datasets of n/B repetitions each, with derived seeds.
inline std::vector<CountsDataset> split_batches(const DensityMatrix& rho, long long n,
                                                std::uint64_t seed, int batch_count) {
  if (batch_count < 1) throw std::invalid_argument("split_batches: need at least 1 batch");
  if (n % batch_count != 0)
    throw std::invalid_argument("split_batches: n is not divisible by the batch count");
  std::vector<CountsDataset> batches;
  batches.reserve(static_cast<std::size_t>(batch_count));
  for (int b = 0; b < batch_count; ++b)
    batches.push_back(simulate_dataset(
        rho, n / batch_count, rng::mix(seed, 0x6261746368ULL, static_cast<std::uint64_t>(b))));
  return batches;
}

/// Entrywise sum of counts; repetitions add up.
inline CountsDataset merge(const std::vector<CountsDataset>& datasets) {
  if (datasets.empty()) throw std::invalid_argument("merge: no datasets");
  CountsDataset out = datasets.front();
  for (std::size_t i = 1; i < datasets.size(); ++i) {
    const CountsDataset& d = datasets[i];
    if (d.k != out.k) throw std::invalid_argument("merge: qubit count mismatch");
    out.n += d.n;
    out.counts += d.counts;
  }
  return out;
}

inline FrequencyTable frequencies(const CountsDataset& data) {
  if (data.n < 1) throw std::invalid_argument("frequencies: dataset has n < 1");
  FrequencyTable f;
  f.k = data.k;
  f.n = data.n;
  f.table = data.counts.cast<double>() / static_cast<double>(data.n);
  return f;
}

/// Frequencies flattened into the settings-major stacked layout, ready for
/// the inverse of the measurement map.
inline ProbabilityVector stacked_frequencies(const CountsDataset& data) {
  const FrequencyTable f = frequencies(data);
  ProbabilityVector pv;
  pv.k = data.k;
  pv.stacked.resize(f.table.rows() * f.table.cols());
  for (Eigen::Index s = 0; s < f.table.rows(); ++s)
    pv.stacked.segment(s * f.table.cols(), f.table.cols()) = f.table.row(s).transpose();
  return pv;
}

}  // namespace lrt
