#include <catch2/catch.hpp>

#include <Eigen/Dense>
#include <vector>

#include "lrt/pauli_model.hpp"
#include "test_util.hpp"

using namespace lrt;

namespace {

// Independent brute-force Gram entry: sum over all settings and outcomes of
// A_b(o|s) A_b'(o|s), in exact integer arithmetic.
long long brute_force_gram(const PauliLabel& b, const PauliLabel& bprime, int k) {
  long long sum = 0;
  const auto design = MeasurementDesign::make(k);
  for (const auto& s : design.settings)
    for (const auto& o : design.outcomes)
      sum += static_cast<long long>(pauli_coefficient(b, o, s)) *
             static_cast<long long>(pauli_coefficient(bprime, o, s));
  return sum;
}

}  // namespace

TEST_CASE("enumerate_settings base cases", "[pauli_model]") {
  const auto s1 = enumerate_settings(1);
  REQUIRE(s1.size() == 3);
  CHECK(setting_to_string(s1[0]) == "x");
  CHECK(setting_to_string(s1[1]) == "y");
  CHECK(setting_to_string(s1[2]) == "z");

  const auto s2 = enumerate_settings(2);
  REQUIRE(s2.size() == 9);
  const std::vector<std::string> expected = {"xx", "xy", "xz", "yx", "yy",
                                             "yz", "zx", "zy", "zz"};
  for (std::size_t i = 0; i < expected.size(); ++i)
    CHECK(setting_to_string(s2[i]) == expected[i]);

  CHECK(enumerate_settings(4).size() == 81);
  CHECK_THROWS_AS(enumerate_settings(0), std::invalid_argument);
  CHECK_THROWS_AS(enumerate_settings(11), std::invalid_argument);
}

TEST_CASE("setting index round trip", "[pauli_model]") {
  for (int k : {1, 2, 3}) {
    const auto settings = enumerate_settings(k);
    for (std::size_t i = 0; i < settings.size(); ++i) {
      CHECK(setting_index(settings[i]) == static_cast<long long>(i));
      CHECK(setting_from_index(k, static_cast<long long>(i)) == settings[i]);
    }
  }
}

TEST_CASE("pauli_coefficient worked cases", "[pauli_model]") {
  const PauliLabel b_ii{{PauliOp::I, PauliOp::I}};
  const PauliLabel b_xi{{PauliOp::X, PauliOp::I}};
  const PauliLabel b_xz{{PauliOp::X, PauliOp::Z}};
  const Setting s_xy = setting_from_string("xy");

  for (int o = 0; o < 4; ++o)
    for (long long si = 0; si < 9; ++si)
      CHECK(pauli_coefficient(b_ii, outcome_signs(o, 2), setting_from_index(2, si)) == 1);

  CHECK(pauli_coefficient(b_xi, {+1, -1}, s_xy) == +1);
  CHECK(pauli_coefficient(b_xi, {-1, -1}, s_xy) == -1);
  for (int o = 0; o < 4; ++o)
    CHECK(pauli_coefficient(b_xz, outcome_signs(o, 2), s_xy) == 0);

  CHECK_THROWS_AS(pauli_coefficient(b_xi, {+1}, s_xy), std::invalid_argument);
}

TEST_CASE("gram diagonal entries", "[pauli_model]") {
  CHECK(gram_diagonal_entry(PauliLabel{{PauliOp::I}}, 1) == 6);
  CHECK(gram_diagonal_entry(PauliLabel{{PauliOp::X}}, 1) == 2);
  const PauliLabel b_iz{{PauliOp::I, PauliOp::Z}};
  CHECK(gram_diagonal_entry(b_iz, 2) == 12);
  CHECK(brute_force_gram(b_iz, b_iz, 2) == 12);
}

TEST_CASE("gram matrix is diagonal with exact entries, k<=2", "[pauli_model]") {
  for (int k : {1, 2}) {
    const long long labels = pow_ll(4, k);
    for (long long bi = 0; bi < labels; ++bi) {
      const PauliLabel b = label_from_index(k, bi);
      for (long long ci = 0; ci < labels; ++ci) {
        const PauliLabel c = label_from_index(k, ci);
        const long long expected = (bi == ci) ? gram_diagonal_entry(b, k) : 0;
        REQUIRE(brute_force_gram(b, c, k) == expected);
      }
    }
  }
}

TEST_CASE("state_to_pauli_coeffs", "[pauli_model]") {
  SECTION("maximally mixed state") {
    for (int k : {1, 2, 3}) {
      const Eigen::Index d = Eigen::Index(1) << k;
      const auto coeffs =
          state_to_pauli_coeffs(Eigen::MatrixXcd::Identity(d, d) / double(d));
      CHECK(coeffs.values(0) == Approx(1.0 / double(d)).margin(1e-14));
      for (Eigen::Index i = 1; i < coeffs.values.size(); ++i)
        CHECK(std::abs(coeffs.values(i)) < 1e-14);
    }
  }

  SECTION("single qubit with x polarization") {
    Eigen::MatrixXcd rho(2, 2);
    rho << 0.5, 0.3, 0.3, 0.5;  // (I + 0.6 sigma_x) / 2
    const auto coeffs = state_to_pauli_coeffs(rho);
    CHECK(coeffs.values(0) == Approx(0.5).margin(1e-14));
    CHECK(coeffs.values(1) == Approx(0.3).margin(1e-14));
    CHECK(std::abs(coeffs.values(2)) < 1e-14);
    CHECK(std::abs(coeffs.values(3)) < 1e-14);
  }

  SECTION("round trip through the basis expansion") {
    for (int k : {1, 2, 3}) {
      const int d = 1 << k;
      const Eigen::MatrixXcd rho = testutil::random_density(d, 100 + k);
      const Eigen::MatrixXcd back = matrix_from_pauli_coeffs(state_to_pauli_coeffs(rho));
      CHECK(max_abs(back - rho) < 1e-12);
    }
  }

  SECTION("rejects non-Hermitian input") {
    Eigen::MatrixXcd m(2, 2);
    m << 1.0, cxd(0.2, 0.1), cxd(0.4, 0.3), 0.0;
    CHECK_THROWS_AS(state_to_pauli_coeffs(m), std::invalid_argument);
  }
}

TEST_CASE("coefficients of Hermitian matrices are real", "[pauli_model]") {
  // The library stores the real part; check the imaginary part vanishes on the
  // raw traces for a sample of labels.
  const int k = 3;
  const Eigen::MatrixXcd rho = testutil::random_hermitian(1 << k, 7);
  const long long labels = pow_ll(4, k);
  for (long long bi = 0; bi < labels; bi += 5) {
    const Eigen::MatrixXcd sigma = pauli_basis_matrix(label_from_index(k, bi));
    const cxd tr = (rho * sigma).trace();
    CHECK(std::abs(tr.imag()) < 1e-12);
  }
}

TEST_CASE("probabilities of basic states", "[pauli_model]") {
  SECTION("maximally mixed is uniform for every setting") {
    for (int k : {1, 2, 3}) {
      const Eigen::Index d = Eigen::Index(1) << k;
      const DensityMatrix rho(Eigen::MatrixXcd::Identity(d, d) / double(d));
      for (const auto& s : enumerate_settings(k)) {
        const Eigen::VectorXd p = probabilities(rho, s);
        for (Eigen::Index o = 0; o < d; ++o)
          CHECK(p(o) == Approx(1.0 / double(d)).margin(1e-13));
      }
    }
  }

  SECTION("z eigenstate") {
    Eigen::MatrixXcd up(2, 2);
    up << 1, 0, 0, 0;
    const DensityMatrix rho(up);
    const Eigen::VectorXd pz = probabilities(rho, setting_from_string("z"));
    CHECK(pz(0) == Approx(1.0).margin(1e-13));
    CHECK(pz(1) == Approx(0.0).margin(1e-13));
    const Eigen::VectorXd px = probabilities(rho, setting_from_string("x"));
    CHECK(px(0) == Approx(0.5).margin(1e-13));
    CHECK(px(1) == Approx(0.5).margin(1e-13));
  }

  SECTION("x polarized qubit") {
    Eigen::MatrixXcd m(2, 2);
    m << 0.5, 0.3, 0.3, 0.5;
    const Eigen::VectorXd p = probabilities(DensityMatrix(m), setting_from_string("x"));
    CHECK(p(0) == Approx(0.8).margin(1e-13));
    CHECK(p(1) == Approx(0.2).margin(1e-13));
  }

  SECTION("invalid setting symbol") {
    CHECK_THROWS_AS(setting_from_string("xq"), std::invalid_argument);
  }
}

TEST_CASE("rotation path agrees with projector traces", "[pauli_model]") {
  for (int k : {1, 2, 3}) {
    const int d = 1 << k;
    const DensityMatrix rho(testutil::random_density(d, 40 + k));
    for (const auto& s : enumerate_settings(k)) {
      const Eigen::VectorXd fast = probabilities(rho, s);
      const Eigen::VectorXd slow = probabilities_direct(rho, s);
      CHECK((fast - slow).cwiseAbs().maxCoeff() < 1e-12);
      CHECK(fast.sum() == Approx(1.0).margin(1e-12));
    }
  }
}

TEST_CASE("forward_map", "[pauli_model]") {
  SECTION("maximally mixed maps to the uniform vector") {
    const Eigen::Index d = 4;
    const auto coeffs =
        state_to_pauli_coeffs(Eigen::MatrixXcd::Identity(d, d) / double(d));
    const ProbabilityVector p = forward_map(coeffs);
    REQUIRE(p.stacked.size() == 36);
    for (Eigen::Index i = 0; i < p.stacked.size(); ++i)
      CHECK(p.stacked(i) == Approx(0.25).margin(1e-13));
  }

  SECTION("zero coefficients map to zero") {
    PauliCoefficients coeffs;
    coeffs.k = 2;
    coeffs.values = Eigen::VectorXd::Zero(16);
    CHECK(forward_map(coeffs).stacked.isZero(0.0));
  }

  SECTION("agrees with projector probabilities on a random state") {
    const int k = 2;
    const DensityMatrix rho(testutil::random_density(1 << k, 99));
    const ProbabilityVector via_map = forward_map(state_to_pauli_coeffs(rho.mat()));
    const ProbabilityVector direct = probabilities_all(rho);
    CHECK((via_map.stacked - direct.stacked).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("reconstruct_from_probabilities inverts the map", "[pauli_model]") {
  SECTION("maximally mixed") {
    const Eigen::Index d = 4;
    const DensityMatrix rho(Eigen::MatrixXcd::Identity(d, d) / double(d));
    const Eigen::MatrixXcd back = reconstruct_from_probabilities(probabilities_all(rho));
    CHECK(max_abs(back - rho.mat()) < 1e-12);
  }

  SECTION("rank-6 state with the reference spectrum, k=4") {
    Eigen::VectorXd spectrum = Eigen::VectorXd::Zero(16);
    spectrum.head(6) << 0.47, 0.19, 0.12, 0.11, 0.07, 0.04;
    const DensityMatrix rho(testutil::density_with_spectrum(spectrum, 8));
    const Eigen::MatrixXcd back = reconstruct_from_probabilities(probabilities_all(rho));
    CHECK(std::sqrt(frobenius_error_sq(back, rho.mat())) < 1e-10);
  }

  SECTION("random rank-2 state, k=3") {
    const DensityMatrix rho(testutil::random_density_rank(8, 2, 12345));
    const Eigen::MatrixXcd back = reconstruct_from_probabilities(probabilities_all(rho));
    CHECK(std::sqrt(frobenius_error_sq(back, rho.mat())) < 1e-10);
  }
}

TEST_CASE("round trip property over random states", "[pauli_model]") {
  int case_id = 0;
  for (int k : {1, 2, 3, 4}) {
    for (int rep = 0; rep < 25; ++rep, ++case_id) {
      const int d = 1 << k;
      const DensityMatrix rho(testutil::random_density(d, 1000 + case_id));
      const ProbabilityVector p = forward_map(state_to_pauli_coeffs(rho.mat()));
      const Eigen::MatrixXcd back = reconstruct_from_probabilities(p);
      REQUIRE(std::sqrt(frobenius_error_sq(back, rho.mat())) < 1e-10);
    }
  }
}
