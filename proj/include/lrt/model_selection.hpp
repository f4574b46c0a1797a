#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "lrt/estimators.hpp"
#include "lrt/sampler.hpp"

namespace lrt {

/// Candidate constants for tuning the penalty / threshold rates.
struct CvGrid {
  std::vector<double> values;

  /// 31 equally spaced points 0.0, 0.1, ..., 3.0.
  static CvGrid default_grid() {
    CvGrid g;
    g.values.reserve(31);
    for (int i = 0; i <= 30; ++i) g.values.push_back(0.1 * i);
    return g;
  }

  void validate() const {
    if (values.empty()) throw std::invalid_argument("CvGrid: empty grid");
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (values[i] < 0.0 || values[i] > 3.0)
        throw std::invalid_argument("CvGrid: constants must lie in [0, 3]");
      if (i > 0 && values[i] <= values[i - 1])
        throw std::invalid_argument("CvGrid: constants must be strictly ascending");
    }
  }
};

/// Per-argument criterion values with the per-fold discrepancies behind them.
struct CvReport {
  std::vector<double> arguments;
  std::vector<double> criterion;                        // mean over folds
  std::vector<std::vector<double>> fold_discrepancies;  // [fold][argument]
  int selected_index = 0;
};

/// Per-fold least squares estimates shared by the cross-validation routines.
/// The training and merged estimates are count-weighted averages of the batch
/// estimates; the least squares map is linear in the frequencies, so this is
/// the same matrix the merged counts would give.
struct CvFolds {
  int k = 0;
  std::vector<HermitianEstimate> fold_lse;      // LSE of each held-out batch
  std::vector<HermitianEstimate> training_lse;  // LSE of the merged remainder
  std::vector<long long> training_n;
  CountsDataset merged;
  HermitianEstimate merged_lse;

  static CvFolds make(const std::vector<CountsDataset>& batches) {
    if (batches.size() < 2)
      throw std::invalid_argument("cross-validation needs at least 2 batches");
    CvFolds out;
    out.k = batches.front().k;
    for (const auto& b : batches)
      if (b.k != out.k)
        throw std::invalid_argument("cross-validation: qubit count mismatch");

    const std::size_t fold_count = batches.size();
    const Eigen::Index d = Eigen::Index(1) << out.k;
    out.fold_lse.reserve(fold_count);
    for (const CountsDataset& b : batches) out.fold_lse.push_back(least_squares(b));

    long long total_n = 0;
    Eigen::MatrixXcd total = Eigen::MatrixXcd::Zero(d, d);
    for (std::size_t j = 0; j < fold_count; ++j) {
      total += static_cast<double>(batches[j].n) * out.fold_lse[j];
      total_n += batches[j].n;
    }
    for (std::size_t j = 0; j < fold_count; ++j) {
      const long long n_train = total_n - batches[j].n;
      out.training_n.push_back(n_train);
      out.training_lse.push_back(
          (total - static_cast<double>(batches[j].n) * out.fold_lse[j]) /
          static_cast<double>(n_train));
    }
    out.merged = merge(batches);
    out.merged_lse = total / static_cast<double>(total_n);
    return out;
  }
};

namespace detail {

inline void fill_criterion(CvReport& report) {
  const std::size_t folds = report.fold_discrepancies.size();
  const std::size_t args = report.arguments.size();
  report.criterion.assign(args, 0.0);
  for (std::size_t j = 0; j < folds; ++j)
    for (std::size_t a = 0; a < args; ++a)
      report.criterion[a] += report.fold_discrepancies[j][a];
  for (double& v : report.criterion) v /= static_cast<double>(folds);
}

/// Smallest argument attaining the minimum. For the rank grids the values at
/// kappa >= true rank can differ only at rounding level, so ties are resolved
/// within a tolerance scaled to the minimum.
inline int argmin_with_tie_tolerance(const std::vector<double>& values) {
  double best = values.front();
  for (double v : values) best = std::min(best, v);
  const double tol = 1e-12 + 1e-9 * best;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (values[i] <= best + tol) return static_cast<int>(i);
  return 0;
}

inline int argmin_strict(const std::vector<double>& values) {
  int best_index = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] < values[static_cast<std::size_t>(best_index)])
      best_index = static_cast<int>(i);
  return best_index;
}

/// Squared Frobenius distance || V diag(g) V^dag - F ||^2 evaluated in the
/// eigenbasis V. M = V^dag F V is formed once; each candidate g then costs
/// O(d), which keeps the grid loops cheap.
struct EigenbasisFit {
  Eigen::VectorXd diag_re;
  double base = 0.0;

  static EigenbasisFit make(const Eigen::MatrixXcd& basis, const Eigen::MatrixXcd& f) {
    const Eigen::MatrixXcd m = basis.adjoint() * f * basis;
    EigenbasisFit fit;
    fit.diag_re = m.diagonal().real();
    fit.base = m.squaredNorm() - fit.diag_re.squaredNorm();
    return fit;
  }

  double disc(const Eigen::VectorXd& g) const {
    return base + (g - diag_re).squaredNorm();
  }
};

}  // namespace detail

struct CvRankSelection {
  int rank = 0;
  HermitianEstimate estimate;
  CvReport report;
};

/// Truncation rank chosen by 5-fold style cross-validation: for each held-out
/// batch, the truncated training estimate is compared to the batch's own
/// least squares estimate in squared Frobenius distance.
inline CvRankSelection cv_rank(const CvFolds& folds) {
  const Eigen::Index d = folds.merged.counts.cols();

  CvReport report;
  for (int kappa = 1; kappa <= d; ++kappa)
    report.arguments.push_back(static_cast<double>(kappa));
  for (std::size_t j = 0; j < folds.fold_lse.size(); ++j) {
    const SpectralDecomposition dec = spectral_decompose(folds.training_lse[j]);
    const detail::EigenbasisFit fit =
        detail::EigenbasisFit::make(dec.eigenvectors, folds.fold_lse[j]);
    std::vector<double> disc;
    disc.reserve(static_cast<std::size_t>(d));
    Eigen::VectorXd kept = Eigen::VectorXd::Zero(d);
    for (int kappa = 1; kappa <= d; ++kappa) {
      kept(kappa - 1) = dec.eigenvalues(kappa - 1);
      disc.push_back(fit.disc(kept));
    }
    report.fold_discrepancies.push_back(std::move(disc));
  }
  detail::fill_criterion(report);
  report.selected_index = detail::argmin_with_tie_tolerance(report.criterion);

  CvRankSelection out;
  out.rank = report.selected_index + 1;
  out.estimate = truncate_rank(folds.merged_lse, out.rank);
  out.report = std::move(report);
  return out;
}

inline CvRankSelection cv_rank(const std::vector<CountsDataset>& batches) {
  return cv_rank(CvFolds::make(batches));
}

struct CvPenaltySelection {
  double constant = 0.0;
  int rank = 0;
  HermitianEstimate estimate;
  CvReport report;
  NoiseLevel nu_full;
};

/// Penalty constant chosen by cross-validation: each fold applies the
/// rank-penalised estimator with threshold c * nu^2, where nu comes from the
/// training fold's own repetition count. The winning c is re-applied on the
/// merged data with nu recomputed for the merged repetition count.
inline CvPenaltySelection cv_penalty_constant(const CvFolds& folds, const CvGrid& grid,
                                              double epsilon) {
  grid.validate();
  const int k = folds.merged.k;

  CvReport report;
  report.arguments = grid.values;
  for (std::size_t j = 0; j < folds.fold_lse.size(); ++j) {
    const double nu_train = noise_level(k, folds.training_n[j], epsilon).nu;
    const SpectralDecomposition dec = spectral_decompose(folds.training_lse[j]);
    const detail::EigenbasisFit fit =
        detail::EigenbasisFit::make(dec.eigenvectors, folds.fold_lse[j]);
    std::vector<double> disc;
    disc.reserve(grid.values.size());
    Eigen::VectorXd kept(dec.dim());
    for (double c : grid.values) {
      const double threshold_sq = c * nu_train * nu_train;
      for (Eigen::Index i = 0; i < dec.dim(); ++i)
        kept(i) = (dec.eigenvalues(i) * dec.eigenvalues(i) >= threshold_sq)
                      ? dec.eigenvalues(i)
                      : 0.0;
      disc.push_back(fit.disc(kept));
    }
    report.fold_discrepancies.push_back(std::move(disc));
  }
  detail::fill_criterion(report);
  report.selected_index = detail::argmin_strict(report.criterion);

  CvPenaltySelection out;
  out.constant = grid.values[static_cast<std::size_t>(report.selected_index)];
  out.nu_full = noise_level(k, folds.merged.n, epsilon);
  const PenalisedResult final_pen =
      penalised(folds.merged_lse, std::sqrt(out.constant) * out.nu_full.nu);
  out.rank = final_pen.rank;
  out.estimate = final_pen.estimate;
  out.report = std::move(report);
  return out;
}

inline CvPenaltySelection cv_penalty_constant(const std::vector<CountsDataset>& batches,
                                              const CvGrid& grid, double epsilon) {
  return cv_penalty_constant(CvFolds::make(batches), grid, epsilon);
}

struct CvThresholdSelection {
  double constant = 0.0;
  int rank = 0;
  DensityMatrix estimate;
  CvReport report;
  NoiseLevel nu_full;
};

/// Threshold constant for the physical estimator chosen by cross-validation;
/// each fold thresholds the trace-normalized training estimate at c * 4 nu.
inline CvThresholdSelection cv_threshold_constant(const CvFolds& folds,
                                                  const CvGrid& grid, double epsilon) {
  grid.validate();
  const int k = folds.merged.k;

  CvReport report;
  report.arguments = grid.values;
  for (std::size_t j = 0; j < folds.fold_lse.size(); ++j) {
    const double nu_train = noise_level(k, folds.training_n[j], epsilon).nu;
    const auto [lam, vec] = signed_eigensystem(trace_normalize(folds.training_lse[j]));
    const detail::EigenbasisFit fit = detail::EigenbasisFit::make(vec, folds.fold_lse[j]);
    std::vector<double> disc;
    disc.reserve(grid.values.size());
    for (double c : grid.values)
      disc.push_back(fit.disc(threshold_eigenvalues(lam, c * nu_train).first));
    report.fold_discrepancies.push_back(std::move(disc));
  }
  detail::fill_criterion(report);
  report.selected_index = detail::argmin_strict(report.criterion);

  const double chosen = grid.values[static_cast<std::size_t>(report.selected_index)];
  const NoiseLevel nu_full = noise_level(k, folds.merged.n, epsilon);
  PhysicalResult final_phys =
      physical_threshold(trace_normalize(folds.merged_lse), chosen * nu_full.nu);
  return {chosen, final_phys.rank, std::move(final_phys.estimate), std::move(report),
          nu_full};
}

inline CvThresholdSelection cv_threshold_constant(
    const std::vector<CountsDataset>& batches, const CvGrid& grid, double epsilon) {
  return cv_threshold_constant(CvFolds::make(batches), grid, epsilon);
}

}  // namespace lrt
