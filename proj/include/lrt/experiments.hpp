#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "lrt/estimators.hpp"
#include "lrt/model_selection.hpp"
#include "lrt/sampler.hpp"
#include "lrt/state_gen.hpp"

namespace lrt {

enum class Estimator { ls, oracle, cv, pen, phys, pen_cv, phys_cv };

inline constexpr Estimator kAllEstimators[] = {
    Estimator::ls,     Estimator::oracle, Estimator::cv,     Estimator::pen,
    Estimator::phys,   Estimator::pen_cv, Estimator::phys_cv};

inline const char* estimator_name(Estimator e) {
  switch (e) {
    case Estimator::ls: return "ls";
    case Estimator::oracle: return "oracle";
    case Estimator::cv: return "cv";
    case Estimator::pen: return "pen";
    case Estimator::phys: return "phys";
    case Estimator::pen_cv: return "pen-cv";
    case Estimator::phys_cv: return "phys-cv";
  }
  return "?";
}

inline Estimator estimator_from_name(const std::string& name) {
  for (Estimator e : kAllEstimators)
    if (name == estimator_name(e)) return e;
  throw std::invalid_argument("unknown estimator name: " + name);
}

/// Scenario grid for the simulation study: states of the listed ranks are
/// measured with each repetition count, over independent replicates.
struct ExperimentConfig {
  int k = 4;
  std::vector<int> ranks = {1, 2, 6, 10};
  std::vector<long long> repetition_counts = {20, 100, 500, 2500};
  int replicates = 100;
  double epsilon = 0.1;
  CvGrid grid = CvGrid::default_grid();
  int batches = 5;
  std::uint64_t seed = 20160901;

  void validate() const {
    check_qubit_count(k);
    if (ranks.empty() || repetition_counts.empty())
      throw std::invalid_argument("ExperimentConfig: empty scenario grid");
    const int d = 1 << k;
    for (int r : ranks)
      if (r < 1 || r > d)
        throw std::invalid_argument("ExperimentConfig: rank out of [1, d]");
    for (long long n : repetition_counts)
      if (n < 1 || n % batches != 0)
        throw std::invalid_argument(
            "ExperimentConfig: every n must be positive and divisible by the "
            "batch count");
    if (replicates < 1) throw std::invalid_argument("ExperimentConfig: replicates < 1");
    if (batches < 2) throw std::invalid_argument("ExperimentConfig: need >= 2 batches");
    if (!(epsilon > 0.0 && epsilon < 1.0))
      throw std::invalid_argument("ExperimentConfig: epsilon outside (0, 1)");
    grid.validate();
  }

  /// Reduced grid that keeps CI runtimes short.
  static ExperimentConfig desk_preset() {
    ExperimentConfig c;
    c.replicates = 25;
    c.repetition_counts = {20, 100, 500};
    return c;
  }
};

struct ExperimentRecord {
  int rank = 0;
  long long n = 0;
  int replicate = 0;
  Estimator estimator = Estimator::ls;
  double sq_error = 0.0;
  int selected_rank = 0;
  double chosen_constant = std::numeric_limits<double>::quiet_NaN();  // CV-tuned only
};

/// One state per rank (shared across repetition counts and replicates),
/// B batches per replicate, all seven estimators per replicate. Replicate
/// seeds are derived from (seed, rank, n, replicate), so any execution order
/// produces identical records.
inline std::vector<ExperimentRecord> run_experiment(const ExperimentConfig& config) {
  config.validate();
  const int d = 1 << config.k;

  std::vector<ExperimentRecord> records;
  records.reserve(config.ranks.size() * config.repetition_counts.size() *
                  static_cast<std::size_t>(config.replicates) * 7);

  for (int rank : config.ranks) {
    const DensityMatrix state = random_rank_r_state(
        {d, rank, rng::mix(config.seed, 0x7374617465ULL, static_cast<std::uint64_t>(rank))});

    for (long long n : config.repetition_counts) {
      const NoiseLevel nl = noise_level(config.k, n, config.epsilon);
      for (int rep = 0; rep < config.replicates; ++rep) {
        const std::uint64_t rep_seed =
            rng::mix(config.seed, static_cast<std::uint64_t>(rank),
                     static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(rep));
        const std::vector<CountsDataset> batches =
            split_batches(state, n, rep_seed, config.batches);
        const CvFolds folds = CvFolds::make(batches);
        const HermitianEstimate& lse = folds.merged_lse;

        auto record = [&](Estimator e, const Eigen::MatrixXcd& estimate,
                          int selected_rank, double constant) {
          ExperimentRecord r;
          r.rank = rank;
          r.n = n;
          r.replicate = rep;
          r.estimator = e;
          r.sq_error = frobenius_error_sq(estimate, state.mat());
          r.selected_rank = selected_rank;
          r.chosen_constant = constant;
          records.push_back(r);
        };
        const double not_tuned = std::numeric_limits<double>::quiet_NaN();

        record(Estimator::ls, lse, d, not_tuned);

        const OracleResult orc = oracle_truncation(lse, state);
        record(Estimator::oracle, orc.estimate, orc.rank, not_tuned);

        const CvRankSelection cv = cv_rank(folds);
        record(Estimator::cv, cv.estimate, cv.rank, not_tuned);

        const PenalisedResult pen = penalised(lse, nl.nu);
        record(Estimator::pen, pen.estimate, pen.rank, not_tuned);

        const PhysicalResult phys = physical_threshold(trace_normalize(lse), nl.nu);
        record(Estimator::phys, phys.estimate.mat(), phys.rank, not_tuned);

        const CvPenaltySelection pen_cv =
            cv_penalty_constant(folds, config.grid, config.epsilon);
        record(Estimator::pen_cv, pen_cv.estimate, pen_cv.rank, pen_cv.constant);

        const CvThresholdSelection phys_cv =
            cv_threshold_constant(folds, config.grid, config.epsilon);
        record(Estimator::phys_cv, phys_cv.estimate.mat(), phys_cv.rank,
               phys_cv.constant);
      }
    }
  }

  std::sort(records.begin(), records.end(),
            [](const ExperimentRecord& a, const ExperimentRecord& b) {
              if (a.rank != b.rank) return a.rank < b.rank;
              if (a.n != b.n) return a.n < b.n;
              if (a.replicate != b.replicate) return a.replicate < b.replicate;
              return static_cast<int>(a.estimator) < static_cast<int>(b.estimator);
            });
  return records;
}

/// Per-(rank, n, estimator) statistics of the squared errors plus the
/// selected-rank histogram.
struct SummaryRow {
  int rank = 0;
  long long n = 0;
  Estimator estimator = Estimator::ls;
  int replicates = 0;
  double mean_sq_error = 0.0;
  double std_error = 0.0;  // of the mean
  double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
  double renormalized_mse = 0.0;             // n * mean squared error
  std::vector<long long> rank_histogram;     // index = selected rank
};

namespace detail {

inline double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.size() == 1) return sorted.front();
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

}  // namespace detail

inline std::vector<SummaryRow> aggregate(const std::vector<ExperimentRecord>& records) {
  if (records.empty()) throw std::invalid_argument("aggregate: no records");

  std::map<std::tuple<int, long long, int>, std::vector<const ExperimentRecord*>> groups;
  for (const ExperimentRecord& r : records)
    groups[{r.rank, r.n, static_cast<int>(r.estimator)}].push_back(&r);

  std::vector<SummaryRow> summary;
  summary.reserve(groups.size());
  for (const auto& [key, group] : groups) {
    SummaryRow row;
    row.rank = std::get<0>(key);
    row.n = std::get<1>(key);
    row.estimator = static_cast<Estimator>(std::get<2>(key));
    row.replicates = static_cast<int>(group.size());

    std::vector<double> errors;
    errors.reserve(group.size());
    int max_selected = 0;
    for (const ExperimentRecord* r : group) {
      errors.push_back(r->sq_error);
      max_selected = std::max(max_selected, r->selected_rank);
    }
    row.rank_histogram.assign(static_cast<std::size_t>(max_selected) + 1, 0);
    for (const ExperimentRecord* r : group)
      ++row.rank_histogram[static_cast<std::size_t>(r->selected_rank)];

    const double mean =
        std::accumulate(errors.begin(), errors.end(), 0.0) / errors.size();
    row.mean_sq_error = mean;
    if (errors.size() > 1) {
      double ss = 0.0;
      for (double e : errors) ss += (e - mean) * (e - mean);
      row.std_error = std::sqrt(ss / static_cast<double>(errors.size() - 1) /
                                static_cast<double>(errors.size()));
    }
    std::sort(errors.begin(), errors.end());
    row.min = errors.front();
    row.q1 = detail::quantile_sorted(errors, 0.25);
    row.median = detail::quantile_sorted(errors, 0.5);
    row.q3 = detail::quantile_sorted(errors, 0.75);
    row.max = errors.back();
    row.renormalized_mse = static_cast<double>(row.n) * mean;
    summary.push_back(std::move(row));
  }
  return summary;
}

}  // namespace lrt
