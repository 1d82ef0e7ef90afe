#include <catch2/catch_amalgamated.hpp>

#include "anncert/certify.hpp"
#include "anncert/dynamics.hpp"
#include "test_util.hpp"

using namespace anncert;

TEST_CASE("threshold arithmetic") {
  PreEstimate pre{-1.0, -0.5, 0.05, 0.05};
  CHECK(certification_threshold(pre) == Catch::Approx(-0.80).margin(1e-15));

  PreEstimate exact{-1.0, -0.5, 0.0, 0.0};
  CHECK(certification_threshold(exact) == Catch::Approx(-0.75).margin(1e-15));

  PreEstimate wide{-1.0, -0.5, 0.1, 0.2};
  CHECK(certification_threshold(wide) == Catch::Approx(-0.90).margin(1e-15));
}

TEST_CASE("certify verdicts against a fixed pre-estimation") {
  PreEstimate pre{-1.0, -0.5, 0.05, 0.05};  // threshold -0.80

  EnergyMoments good;
  good.mean = -0.9;
  good.variance = 0.01;
  CertificationReport r = certify(good, pre);
  CHECK(r.variance_is_bound);
  CHECK(r.error_bar == Catch::Approx(0.1).margin(1e-15));
  CHECK(r.threshold == Catch::Approx(-0.80).margin(1e-15));
  CHECK_FALSE(r.improves_preestimate);  // 0.1 not < m0 = 0.05
  CHECK_FALSE(r.shots.has_value());

  EnergyMoments tight = good;
  tight.variance = 1e-4;
  r = certify(tight, pre);
  CHECK(r.variance_is_bound);
  CHECK(r.error_bar == Catch::Approx(0.01).margin(1e-15));
  CHECK(r.improves_preestimate);  // 0.01 < 0.05

  EnergyMoments high;
  high.mean = -0.75;
  high.variance = 1e-4;
  r = certify(high, pre);
  CHECK_FALSE(r.variance_is_bound);
  CHECK_FALSE(r.improves_preestimate);

  // exactly at the threshold: the inequality is strict, no verdict
  EnergyMoments border;
  border.mean = -0.80;
  border.variance = 1e-4;
  CHECK_FALSE(certify(border, pre).variance_is_bound);
}

TEST_CASE("certified error bar contains E0 for a real anneal") {
  // a gapped toy problem whose anneal genuinely reaches the ground state
  auto hp = PauliHamiltonian::parse("-1.0 Z0\n-0.6 Z1");
  auto hd = default_driver(2);
  Spectrum s = diagonalize(hp.to_matrix());
  AnnealConfig cfg{100.0, 0.0, 0, Axis::Z};
  Eigen::VectorXcd psi = evolve_closed(hp, hd, cfg);
  EnergyMoments m = energy_moments(psi, hp);
  PreEstimate pre = synthesize_preestimate(s, 0.05, 0.05, OffsetMode::Centered);
  CertificationReport r = certify(m, pre);
  REQUIRE(r.variance_is_bound);
  double e0 = s.eigenvalues(0);
  CHECK(e0 >= r.measured_energy - r.error_bar - 1e-12);
  CHECK(e0 <= r.measured_energy + 1e-12);
}

TEST_CASE("variance bound holds over random admissible populations") {
  TheoremCheckReport rep = verify_theorem1(100000, 42);
  CHECK(rep.trials == 100000);
  CHECK(rep.min_margin >= -1e-12);
  // Cauchy-Schwarz is tight at the two-level eps^2 = 1/2 boundary
  CHECK(rep.equality_margin == Catch::Approx(0.0).margin(1e-12));
  // and genuinely fails just outside the hypothesis
  CHECK(rep.counterexample_variance == Catch::Approx(0.09).margin(1e-12));
  CHECK(rep.counterexample_error_sq == Catch::Approx(0.81).margin(1e-12));
  CHECK(rep.counterexample_variance < rep.counterexample_error_sq);

  CHECK_THROWS_AS(verify_theorem1(0, 1), std::invalid_argument);
}

TEST_CASE("theorem margin from the definitions") {
  // mean 0.25, variance 0.1875, error^2 0.0625 -> margin 0.125
  double margin = detail::theorem_margin({0.0, 1.0}, {0.75, 0.25});
  CHECK(margin == Catch::Approx(0.125).margin(1e-15));
}

TEST_CASE("sufficiency implication on explicit numbers") {
  // E0 = -1, E1 = 0: mean below -0.5 must come with eps^2 <= 1/2
  CHECK(sufficiency_holds(-0.9, 0.3, -1.0, 0.0));
  CHECK(sufficiency_holds(-0.2, 0.9, -1.0, 0.0));  // hypothesis not met, vacuous
  CHECK_FALSE(sufficiency_holds(-0.9, 0.7, -1.0, 0.0));
  CHECK(sufficiency_holds(-0.5, 0.5, -1.0, 0.0));  // boundary
}

TEST_CASE("sufficiency holds along a closed anneal") {
  auto hp = testutil::load_h2();
  auto hd = default_driver(4);
  Spectrum s = diagonalize(hp.to_matrix());
  for (double T : {5.0, 20.0, 100.0}) {
    AnnealConfig cfg{T, 0.0, 0, Axis::Z};
    Eigen::VectorXcd psi = evolve_closed(hp, hd, cfg);
    CHECK(verify_sufficiency(s, psi));
  }
}

TEST_CASE("threshold decreases as halfwidths grow") {
  auto hp = testutil::load_h2();
  Spectrum s = diagonalize(hp.to_matrix());
  double prev = std::numeric_limits<double>::infinity();
  for (double hw : {0.0, 0.01, 0.05, 0.1, 0.2}) {
    PreEstimate pre = synthesize_preestimate(s, hw, hw, OffsetMode::Centered);
    double thr = certification_threshold(pre);
    CHECK(thr < prev + 1e-15);
    prev = thr;
  }
}
