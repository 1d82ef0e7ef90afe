#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "anncert/common.hpp"
#include "anncert/measure.hpp"
#include "anncert/spectra.hpp"

namespace anncert {

struct CertificationReport {
  double measured_energy = 0.0;    // E0^(ann), GHz
  double measured_variance = 0.0;  // GHz^2
  double threshold = 0.0;          // GHz
  bool variance_is_bound = false;  // measured_energy < threshold (strict)
  double error_bar = 0.0;          // sqrt(variance); meaningful only when bound
  bool improves_preestimate = false;  // bound AND error_bar < m0
  std::optional<long> shots;
};

// 1/2 (E0~ + E1~) - 1/2 (dM0 + dM1): a measured energy strictly below this
// certifies that the ground-state population exceeds 1/2.
inline double certification_threshold(const PreEstimate& pre) {
  return 0.5 * (pre.e0_approx + pre.e1_approx) - 0.5 * (pre.m0 + pre.m1);
}

inline CertificationReport certify(const EnergyMoments& moments, const PreEstimate& pre) {
  CertificationReport r;
  r.measured_energy = moments.mean;
  r.measured_variance = moments.variance;
  r.threshold = certification_threshold(pre);
  r.variance_is_bound = moments.mean < r.threshold;
  r.error_bar = std::sqrt(std::max(moments.variance, 0.0));
  r.improves_preestimate = r.variance_is_bound && r.error_bar < pre.m0;
  r.shots = moments.shots;
  return r;
}

struct TheoremCheckReport {
  long trials = 0;
  double min_margin = 0.0;         // min over trials of variance - error^2
  double equality_margin = 0.0;    // two-level, eps^2 = 1/2 boundary case
  double counterexample_variance = 0.0;  // two-level eps^2 = 0.9
  double counterexample_error_sq = 0.0;
};

namespace detail {

// Variance minus squared estimation error for a diagonal population vector
// over a spectrum, straight from the definitions.
inline double theorem_margin(const std::vector<double>& energies,
                             const std::vector<double>& pops) {
  double e0 = energies[0];
  double mean = 0.0, mean_sq = 0.0;
  for (std::size_t m = 0; m < pops.size(); ++m) {
    mean += pops[m] * energies[m];
    mean_sq += pops[m] * energies[m] * energies[m];
  }
  double variance = mean_sq - mean * mean;
  double err = mean - e0;
  return variance - err * err;
}

}  // namespace detail

// Brute-force verification that the variance dominates the squared error
// whenever the ground population is at least 1/2: random spectra of
// dimension 2..16 with energies in [-2, 2] and random populations with
// eps^2 <= 1/2.  Any margin below -1e-12 is an implementation bug.
inline TheoremCheckReport verify_theorem1(long trials, std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> dim_dist(2, 16);
  std::uniform_real_distribution<double> energy_dist(-2.0, 2.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  TheoremCheckReport report;
  report.trials = trials;
  report.min_margin = std::numeric_limits<double>::infinity();
  for (long trial = 0; trial < trials; ++trial) {
    int dim = dim_dist(rng);
    std::vector<double> energies(dim);
    for (double& e : energies) e = energy_dist(rng);
    std::sort(energies.begin(), energies.end());
    std::vector<double> pops(dim);
    pops[0] = 0.5 + 0.5 * unit(rng);  // eps^2 = 1 - pops[0] <= 1/2
    double rest = 1.0 - pops[0];
    double wsum = 0.0;
    std::vector<double> w(dim - 1);
    for (double& x : w) {
      x = unit(rng);
      wsum += x;
    }
    for (int m = 1; m < dim; ++m)
      pops[m] = wsum > 0 ? rest * w[m - 1] / wsum : rest / (dim - 1);
    double margin = detail::theorem_margin(energies, pops);
    report.min_margin = std::min(report.min_margin, margin);
    if (margin < -1e-12)
      throw ComputationError("theorem violation: margin " + fmt17(margin) +
                             " at trial " + std::to_string(trial));
  }
  // Cauchy-Schwarz equality boundary: two levels, eps^2 = 1/2, gap 1.
  report.equality_margin = detail::theorem_margin({0.0, 1.0}, {0.5, 0.5});
  // Outside the hypothesis the bound genuinely fails: eps^2 = 0.9 gives
  // variance 0.09 against squared error 0.81.
  {
    std::vector<double> e{0.0, 1.0}, p{0.1, 0.9};
    double mean = p[0] * e[0] + p[1] * e[1];
    double mean_sq = p[0] * e[0] * e[0] + p[1] * e[1] * e[1];
    report.counterexample_variance = mean_sq - mean * mean;
    report.counterexample_error_sq = (mean - e[0]) * (mean - e[0]);
  }
  return report;
}

// Instance check of the sufficiency chain: <H> <= (E0+E1)/2 must imply
// eps^2 <= 1/2.  Returns true when the implication holds for this state.
template <typename State>
bool verify_sufficiency(const Spectrum& s, const State& state,
                        double degeneracy_tol = kDefaultDegeneracyTol) {
  auto [e0, e1] = first_gap(s, degeneracy_tol);
  PopulationDecomposition d = decompose(state, s, degeneracy_tol);
  double mean = 0.0;
  for (std::size_t m = 0; m < d.populations.size(); ++m)
    mean += d.populations[m] * s.eigenvalues(static_cast<Eigen::Index>(m));
  if (mean <= 0.5 * (e0 + e1)) return d.epsilon_squared <= 0.5 + 1e-9;
  return true;
}

// Same implication stated on precomputed cell values.
inline bool sufficiency_holds(double mean, double epsilon_squared, double e0, double e1) {
  if (mean <= 0.5 * (e0 + e1)) return epsilon_squared <= 0.5 + 1e-9;
  return true;
}

}  // namespace anncert
