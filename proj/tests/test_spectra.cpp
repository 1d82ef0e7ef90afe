#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "anncert/measure.hpp"
#include "anncert/spectra.hpp"
#include "test_util.hpp"

using namespace anncert;

namespace {

Eigen::MatrixXcd random_hermitian(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> g;
  Eigen::MatrixXcd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = Complex(g(rng), g(rng));
  return 0.5 * (m + m.adjoint().eval());
}

}  // namespace

TEST_CASE("oracle eigensolver handles known 2x2 cases") {
  // sigma_x
  std::vector<std::vector<oracle::cplx>> sx{{{0, 0}, {1, 0}}, {{1, 0}, {0, 0}}};
  auto es = oracle::jacobi_eigensolver(sx);
  CHECK(es.values[0] == Catch::Approx(-1.0).margin(1e-13));
  CHECK(es.values[1] == Catch::Approx(1.0).margin(1e-13));
  // sigma_y
  std::vector<std::vector<oracle::cplx>> sy{{{0, 0}, {0, -1}}, {{0, 1}, {0, 0}}};
  es = oracle::jacobi_eigensolver(sy);
  CHECK(es.values[0] == Catch::Approx(-1.0).margin(1e-13));
  CHECK(es.values[1] == Catch::Approx(1.0).margin(1e-13));
}

TEST_CASE("oracle eigensolver reconstructs random Hermitian matrices") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXcd m = random_hermitian(rng, 6);
    auto es = oracle::jacobi_eigensolver(testutil::to_oracle(m));
    // A v = lambda v per pair
    for (int k = 0; k < 6; ++k) {
      double resid = 0.0;
      for (int i = 0; i < 6; ++i) {
        oracle::cplx acc(0, 0);
        for (int j = 0; j < 6; ++j) acc += m(i, j) * es.vectors[k][j];
        resid = std::max(resid, std::abs(acc - es.values[k] * es.vectors[k][i]));
      }
      CHECK(resid < 1e-10);
    }
  }
}

TEST_CASE("diagonalize diag(1, -1)") {
  Eigen::MatrixXcd m(2, 2);
  m << 1, 0, 0, -1;
  Spectrum s = diagonalize(m);
  CHECK(s.eigenvalues(0) == Catch::Approx(-1.0).margin(1e-14));
  CHECK(s.eigenvalues(1) == Catch::Approx(1.0).margin(1e-14));
}

TEST_CASE("diagonalize sigma_x") {
  Eigen::MatrixXcd m(2, 2);
  m << 0, 1, 1, 0;
  Spectrum s = diagonalize(m);
  CHECK(s.eigenvalues(0) == Catch::Approx(-1.0).margin(1e-14));
  CHECK(s.eigenvalues(1) == Catch::Approx(1.0).margin(1e-14));
  double inv = std::sqrt(0.5);
  CHECK(std::abs(std::abs(s.eigenvectors(0, 0)) - inv) < 1e-12);
  CHECK(std::abs(std::abs(s.eigenvectors(1, 0)) - inv) < 1e-12);
  CHECK(std::abs(s.eigenvectors.col(0).dot(s.eigenvectors.col(1))) < 1e-12);
}

TEST_CASE("diagonalize rejects non-Hermitian input") {
  Eigen::MatrixXcd m(2, 2);
  m << 0, 1, 0, 0;
  CHECK_THROWS_AS(diagonalize(m), ComputationError);
}

TEST_CASE("hydrogen spectrum matches the independent oracle") {
  auto h2 = testutil::load_h2();
  Eigen::MatrixXcd m = h2.to_matrix();
  Spectrum s = diagonalize(m);
  auto es = oracle::jacobi_eigensolver(testutil::to_oracle(m));
  REQUIRE(s.eigenvalues.size() == 16);
  for (int i = 0; i < 16; ++i)
    CHECK(s.eigenvalues(i) == Catch::Approx(es.values[i]).margin(1e-10));
}

TEST_CASE("reconstruction V diag(lambda) V^dag") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::MatrixXcd m = random_hermitian(rng, 8);
    Spectrum s = diagonalize(m);
    Eigen::MatrixXcd rebuilt = s.eigenvectors *
                               s.eigenvalues.asDiagonal().toDenseMatrix().cast<Complex>() *
                               s.eigenvectors.adjoint();
    CHECK((rebuilt - m).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("first_gap skips numerically split degeneracies") {
  Spectrum s;
  s.eigenvalues = Eigen::Vector3d(-1.0, -1.0 + 1e-12, 0.5);
  s.eigenvectors = Eigen::MatrixXcd::Identity(3, 3);
  auto [e0, e1] = first_gap(s, 1e-9);
  CHECK(e0 == -1.0);
  CHECK(e1 == 0.5);
}

TEST_CASE("first_gap basics and the fully degenerate error") {
  Spectrum s;
  s.eigenvalues = Eigen::Vector2d(0.0, 1.0);
  s.eigenvectors = Eigen::MatrixXcd::Identity(2, 2);
  auto [e0, e1] = first_gap(s);
  CHECK(e0 == 0.0);
  CHECK(e1 == 1.0);

  s.eigenvalues = Eigen::Vector2d(0.5, 0.5);
  CHECK_THROWS_AS(first_gap(s), ComputationError);
}

TEST_CASE("decompose of a ground eigenvector") {
  auto h2 = testutil::load_h2();
  Spectrum s = diagonalize(h2.to_matrix());
  Eigen::VectorXcd ground = s.eigenvectors.col(0);
  auto d = decompose(ground, s);
  CHECK(d.populations[0] == Catch::Approx(1.0).margin(1e-12));
  CHECK(d.epsilon_squared == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("decompose of the uniform mixture") {
  auto h2 = testutil::load_h2();
  Spectrum s = diagonalize(h2.to_matrix());
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Identity(16, 16) / 16.0;
  auto d = decompose(rho, s);
  for (double p : d.populations) CHECK(p == Catch::Approx(1.0 / 16).margin(1e-12));
}

TEST_CASE("decompose rejects mismatched dimensions") {
  auto h2 = testutil::load_h2();
  Spectrum s = diagonalize(h2.to_matrix());
  CHECK_THROWS_AS(decompose(Eigen::VectorXcd::Ones(4).eval(), s), std::invalid_argument);
}

TEST_CASE("population-weighted energy equals the term-wise expectation") {
  // off-diagonal terms in the energy basis do not contribute to <H>
  std::mt19937_64 rng(23);
  auto h2 = testutil::load_h2();
  Spectrum s = diagonalize(h2.to_matrix());
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::VectorXcd psi(16);
    for (int i = 0; i < 16; ++i) psi(i) = Complex(g(rng), g(rng));
    psi.normalize();
    auto d = decompose(psi, s);
    double from_pops = 0.0;
    for (int m = 0; m < 16; ++m) from_pops += d.populations[m] * s.eigenvalues(m);
    CHECK(from_pops == Catch::Approx(expectation(psi, h2)).margin(1e-8));
  }
}

TEST_CASE("synthesize_preestimate modes") {
  Spectrum s;
  s.eigenvalues = Eigen::Vector2d(-1.0, 0.0);
  s.eigenvectors = Eigen::MatrixXcd::Identity(2, 2);
  PreEstimate c = synthesize_preestimate(s, 0.1, 0.1, OffsetMode::Centered);
  CHECK(c.e0_approx == -1.0);
  CHECK(c.e1_approx == 0.0);
  CHECK(c.m0 == 0.1);
  CHECK(c.m1 == 0.1);
  PreEstimate w = synthesize_preestimate(s, 0.1, 0.1, OffsetMode::WorstCaseShift);
  CHECK(w.e0_approx == Catch::Approx(-0.9));
  CHECK(w.e1_approx == Catch::Approx(-0.1));
  CHECK_THROWS_AS(synthesize_preestimate(s, -0.1, 0.1, OffsetMode::Centered),
                  std::invalid_argument);
}
