#include <catch2/catch.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "lrt/model_selection.hpp"
#include "lrt/state_gen.hpp"
#include "test_util.hpp"

using namespace lrt;

namespace {

// Dataset whose frequencies equal the exact outcome probabilities; only valid
// when every n * p(o|s) is an integer.
CountsDataset exact_dataset(const DensityMatrix& rho, long long n) {
  int k = 0;
  while ((Eigen::Index(1) << k) < rho.dim()) ++k;
  CountsDataset data;
  data.k = k;
  data.n = n;
  data.counts.resize(pow_ll(3, k), Eigen::Index(1) << k);
  for (long long s = 0; s < data.counts.rows(); ++s) {
    const Eigen::VectorXd p = probabilities(rho, setting_from_index(k, s));
    for (Eigen::Index o = 0; o < data.counts.cols(); ++o) {
      const double scaled = static_cast<double>(n) * p(o);
      const long long rounded = std::llround(scaled);
      REQUIRE(std::abs(scaled - rounded) < 1e-9);
      data.counts(s, o) = rounded;
    }
    REQUIRE(data.counts.row(s).sum() == n);
  }
  return data;
}

DensityMatrix dyadic_rank2_state() {
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(4, 4);
  m(0, 0) = 0.75;
  m(1, 1) = 0.25;
  return DensityMatrix(m);
}

}  // namespace

TEST_CASE("cv grid validation", "[model_selection]") {
  CHECK(CvGrid::default_grid().values.size() == 31);
  CHECK(CvGrid::default_grid().values.front() == 0.0);
  CHECK(CvGrid::default_grid().values.back() == Approx(3.0));
  CHECK_THROWS_AS(CvGrid{}.validate(), std::invalid_argument);
  const CvGrid negative{{-0.1, 1.0}};
  const CvGrid too_large{{0.0, 3.5}};
  const CvGrid unsorted{{1.0, 0.5}};
  CHECK_THROWS_AS(negative.validate(), std::invalid_argument);
  CHECK_THROWS_AS(too_large.validate(), std::invalid_argument);
  CHECK_THROWS_AS(unsorted.validate(), std::invalid_argument);
}

TEST_CASE("cv_rank on noiseless folds selects the true rank", "[model_selection]") {
  const DensityMatrix rho = dyadic_rank2_state();
  std::vector<CountsDataset> batches;
  for (int b = 0; b < 5; ++b) batches.push_back(exact_dataset(rho, 16));

  const CvRankSelection sel = cv_rank(batches);
  CHECK(sel.rank == 2);
  CHECK(max_abs(sel.estimate - rho.mat()) < 1e-10);
  // beyond the true rank the criterion is flat at rounding level
  for (int kappa = 2; kappa <= 4; ++kappa)
    CHECK(sel.report.criterion[static_cast<std::size_t>(kappa - 1)] < 1e-20);
  CHECK(sel.report.criterion[0] > 1e-3);
}

TEST_CASE("cv_rank criterion matches a direct recomputation", "[model_selection]") {
  const DensityMatrix rho(testutil::random_density_rank(2, 1, 64));
  std::vector<CountsDataset> batches = split_batches(rho, 40, 17, 2);
  const CvRankSelection sel = cv_rank(batches);

  for (int kappa = 1; kappa <= 2; ++kappa) {
    double expected = 0.0;
    for (int j = 0; j < 2; ++j) {
      const HermitianEstimate training = least_squares(batches[static_cast<std::size_t>(1 - j)]);
      const HermitianEstimate held_out = least_squares(batches[static_cast<std::size_t>(j)]);
      expected += frobenius_error_sq(truncate_rank(training, kappa), held_out);
    }
    expected /= 2.0;
    CHECK(sel.report.criterion[static_cast<std::size_t>(kappa - 1)] ==
          Approx(expected).margin(1e-14));
  }
  CHECK(sel.report.criterion[static_cast<std::size_t>(sel.report.selected_index)] ==
        Approx(*std::min_element(sel.report.criterion.begin(), sel.report.criterion.end()))
            .margin(0.0));
}

TEST_CASE("cv_rank input validation", "[model_selection]") {
  const DensityMatrix rho(testutil::random_density(2, 2));
  CHECK_THROWS_AS(cv_rank({simulate_dataset(rho, 10, 1)}), std::invalid_argument);
}

TEST_CASE("cv_penalty_constant", "[model_selection]") {
  const DensityMatrix rho(testutil::random_density_rank(4, 2, 8));
  const std::vector<CountsDataset> batches = split_batches(rho, 100, 5, 5);

  SECTION("c = 0 keeps everything, criterion equals the raw fit discrepancy") {
    const CvPenaltySelection sel =
        cv_penalty_constant(batches, CvGrid{{0.0, 1.0}}, 0.1);
    double raw = 0.0;
    for (int j = 0; j < 5; ++j) {
      std::vector<CountsDataset> rest;
      for (int i = 0; i < 5; ++i)
        if (i != j) rest.push_back(batches[static_cast<std::size_t>(i)]);
      raw += frobenius_error_sq(least_squares(merge(rest)),
                                least_squares(batches[static_cast<std::size_t>(j)]));
    }
    raw /= 5.0;
    CHECK(sel.report.criterion[0] == Approx(raw).margin(1e-13));
  }

  SECTION("singleton grid reduces to the theoretical penalised estimator") {
    const CvPenaltySelection sel = cv_penalty_constant(batches, CvGrid{{1.0}}, 0.1);
    const NoiseLevel nl = noise_level(2, 100, 0.1);
    const PenalisedResult pen = penalised(least_squares(merge(batches)), nl.nu);
    CHECK(sel.constant == 1.0);
    CHECK(sel.rank == pen.rank);
    CHECK(max_abs(sel.estimate - pen.estimate) < 1e-13);
  }

  SECTION("criterion matches a direct recomputation on every grid point") {
    const CvGrid grid{{0.0, 0.5, 1.0, 2.0}};
    const CvPenaltySelection sel = cv_penalty_constant(batches, grid, 0.1);
    for (std::size_t ci = 0; ci < grid.values.size(); ++ci) {
      double expected = 0.0;
      for (int j = 0; j < 5; ++j) {
        std::vector<CountsDataset> rest;
        for (int i = 0; i < 5; ++i)
          if (i != j) rest.push_back(batches[static_cast<std::size_t>(i)]);
        const double nu_train = noise_level(2, 80, 0.1).nu;
        const PenalisedResult pen = penalised(least_squares(merge(rest)),
                                              std::sqrt(grid.values[ci]) * nu_train);
        expected += frobenius_error_sq(pen.estimate,
                                       least_squares(batches[static_cast<std::size_t>(j)]));
      }
      expected /= 5.0;
      CHECK(sel.report.criterion[ci] == Approx(expected).margin(1e-13));
    }
    CHECK(sel.report.criterion[static_cast<std::size_t>(sel.report.selected_index)] ==
          Approx(*std::min_element(sel.report.criterion.begin(),
                                   sel.report.criterion.end()))
              .margin(0.0));
  }
}

TEST_CASE("cv_threshold_constant", "[model_selection]") {
  const DensityMatrix rho(testutil::random_density_rank(4, 2, 21));
  const std::vector<CountsDataset> batches = split_batches(rho, 100, 77, 5);

  SECTION("c = 0 still yields a density matrix") {
    const CvThresholdSelection sel =
        cv_threshold_constant(batches, CvGrid{{0.0}}, 0.1);
    CHECK(sel.constant == 0.0);
    CHECK(sel.estimate.mat().trace().real() == Approx(1.0).margin(1e-12));
    CHECK(sel.rank >= 1);
  }

  SECTION("singleton grid reduces to the theoretical physical estimator") {
    const CvThresholdSelection sel = cv_threshold_constant(batches, CvGrid{{1.0}}, 0.1);
    const NoiseLevel nl = noise_level(2, 100, 0.1);
    const PhysicalResult phys =
        physical_threshold(trace_normalize(least_squares(merge(batches))), nl.nu);
    CHECK(sel.rank == phys.rank);
    CHECK(max_abs(sel.estimate.mat() - phys.estimate.mat()) < 1e-13);
  }

  SECTION("criterion matches a direct recomputation") {
    const CvGrid grid{{0.0, 0.4, 1.2}};
    const CvThresholdSelection sel = cv_threshold_constant(batches, grid, 0.1);
    for (std::size_t ci = 0; ci < grid.values.size(); ++ci) {
      double expected = 0.0;
      for (int j = 0; j < 5; ++j) {
        std::vector<CountsDataset> rest;
        for (int i = 0; i < 5; ++i)
          if (i != j) rest.push_back(batches[static_cast<std::size_t>(i)]);
        const double nu_train = noise_level(2, 80, 0.1).nu;
        const PhysicalResult phys = physical_threshold(
            trace_normalize(least_squares(merge(rest))), grid.values[ci] * nu_train);
        expected += frobenius_error_sq(phys.estimate.mat(),
                                       least_squares(batches[static_cast<std::size_t>(j)]));
      }
      expected /= 5.0;
      CHECK(sel.report.criterion[ci] == Approx(expected).margin(1e-13));
    }
  }
}

TEST_CASE("cv criterion estimates the training mean square error up to a constant",
          "[model_selection][slow]") {
  // Paired differences of CV(kappa) - ||rho_{-1}(kappa) - rho||^2 must not
  // depend on kappa beyond Monte Carlo noise.
  const int k = 2, d = 4;
  const DensityMatrix rho(testutil::random_density_rank(d, 2, 1001));
  const int reps = 200;
  Eigen::MatrixXd paired(reps, d);  // D_kappa - D_d per replicate

  for (int rep = 0; rep < reps; ++rep) {
    const std::vector<CountsDataset> batches =
        split_batches(rho, 100, rng::mix(4100, rep), 5);
    const CvRankSelection sel = cv_rank(batches);

    std::vector<CountsDataset> rest(batches.begin() + 1, batches.end());
    const SpectralDecomposition dec = spectral_decompose(least_squares(merge(rest)));
    Eigen::VectorXd diff(d);
    for (int kappa = 1; kappa <= d; ++kappa) {
      const double err = frobenius_error_sq(truncate_rank(dec, kappa), rho.mat());
      diff(kappa - 1) =
          sel.report.criterion[static_cast<std::size_t>(kappa - 1)] - err;
    }
    paired.row(rep) = (diff.array() - diff(d - 1)).transpose();
  }

  for (int kappa = 1; kappa < d; ++kappa) {
    const double mean = paired.col(kappa - 1).mean();
    const double sd = std::sqrt(
        (paired.col(kappa - 1).array() - mean).square().sum() / (reps - 1));
    const double se = sd / std::sqrt(static_cast<double>(reps));
    INFO("kappa = " << kappa << ", mean = " << mean << ", se = " << se);
    CHECK(std::abs(mean) <= 4.0 * se + 1e-9);
  }
}

TEST_CASE("cv_rank recovers rank 2 at k=4, n=2500 in most replicates",
          "[model_selection][slow]") {
  const DensityMatrix rho = random_rank_r_state({16, 2, 2});
  int hits = 0;
  const int reps = 50;
  for (int rep = 0; rep < reps; ++rep) {
    const std::vector<CountsDataset> batches =
        split_batches(rho, 2500, rng::mix(777100, rep), 5);
    hits += (cv_rank(batches).rank == 2);
  }
  CHECK(hits > reps / 2);
}
