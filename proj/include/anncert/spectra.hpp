#pragma once

#include <cmath>
#include <complex>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "anncert/common.hpp"

namespace anncert {

// Full eigendecomposition of a Hermitian matrix, eigenvalues ascending,
// eigenvectors as orthonormal columns in matching order.
struct Spectrum {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXcd eigenvectors;
};

// Classical pre-estimation record: approximate two lowest energies with
// guaranteed error bounds.  Only the bounds are data; the true deviations
// are unobservable.
struct PreEstimate {
  double e0_approx = 0.0;  // GHz
  double e1_approx = 0.0;  // GHz
  double m0 = 0.0;         // GHz, bound on |e0_approx - E0|
  double m1 = 0.0;         // GHz, bound on |e1_approx - E1|
};

struct PopulationDecomposition {
  std::vector<double> populations;  // per eigenvector, sums to 1
  double epsilon_squared = 0.0;     // 1 - ground-space population
};

enum class OffsetMode { Centered, WorstCaseShift };

constexpr double kDefaultDegeneracyTol = 1e-9;  // GHz

inline void check_hermitian(const Eigen::MatrixXcd& m, double tol = 1e-10) {
  double dev = (m - m.adjoint()).cwiseAbs().maxCoeff();
  if (dev > tol)
    throw ComputationError("matrix is not Hermitian (max deviation " +
                           fmt17(dev) + ")");
}

// Deterministic eigendecomposition: solver output with each column's phase
// fixed so its largest-magnitude entry is real positive.
inline Spectrum diagonalize(const Eigen::MatrixXcd& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("matrix must be square");
  check_hermitian(m);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(m);
  if (solver.info() != Eigen::Success)
    throw ComputationError("eigensolver failed to converge");
  Spectrum s;
  s.eigenvalues = solver.eigenvalues();
  s.eigenvectors = solver.eigenvectors();
  for (Eigen::Index j = 0; j < s.eigenvectors.cols(); ++j) {
    Eigen::Index imax = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < s.eigenvectors.rows(); ++i) {
      double a = std::abs(s.eigenvectors(i, j));
      if (a > best) {
        best = a;
        imax = i;
      }
    }
    std::complex<double> z = s.eigenvectors(imax, j);
    if (std::abs(z) > 0) s.eigenvectors.col(j) *= std::conj(z) / std::abs(z);
  }
  return s;
}

// Lowest energy and the lowest energy above it by more than degeneracy_tol.
inline std::pair<double, double> first_gap(const Spectrum& s,
                                           double degeneracy_tol = kDefaultDegeneracyTol) {
  if (s.eigenvalues.size() < 2)
    throw std::invalid_argument("need at least two eigenvalues");
  double e0 = s.eigenvalues(0);
  for (Eigen::Index i = 1; i < s.eigenvalues.size(); ++i)
    if (s.eigenvalues(i) > e0 + degeneracy_tol) return {e0, s.eigenvalues(i)};
  throw ComputationError("spectrum is fully degenerate within tolerance");
}

namespace detail {

inline PopulationDecomposition finish_decomposition(std::vector<double> pops,
                                                    const Spectrum& s,
                                                    double degeneracy_tol) {
  double sum = 0.0;
  for (double& p : pops) {
    if (p < -1e-6) throw ComputationError("negative population " + fmt17(p));
    if (p < 0.0) p = 0.0;  // positivity clamp within integrator tolerance
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-6)
    throw ComputationError("populations sum to " + fmt17(sum));
  double e0 = s.eigenvalues(0);
  double ground = 0.0;
  for (std::size_t m = 0; m < pops.size(); ++m)
    if (s.eigenvalues(static_cast<Eigen::Index>(m)) <= e0 + degeneracy_tol)
      ground += pops[m];
  PopulationDecomposition out;
  out.populations = std::move(pops);
  out.epsilon_squared = 1.0 - ground;
  return out;
}

}  // namespace detail

inline PopulationDecomposition decompose(const Eigen::VectorXcd& psi, const Spectrum& s,
                                         double degeneracy_tol = kDefaultDegeneracyTol) {
  if (psi.size() != s.eigenvectors.rows())
    throw std::invalid_argument("state dimension does not match spectrum");
  std::vector<double> pops(psi.size());
  for (Eigen::Index m = 0; m < psi.size(); ++m)
    pops[m] = std::norm(s.eigenvectors.col(m).dot(psi));
  return detail::finish_decomposition(std::move(pops), s, degeneracy_tol);
}

inline PopulationDecomposition decompose(const Eigen::MatrixXcd& rho, const Spectrum& s,
                                         double degeneracy_tol = kDefaultDegeneracyTol) {
  if (rho.rows() != s.eigenvectors.rows() || rho.cols() != s.eigenvectors.rows())
    throw std::invalid_argument("state dimension does not match spectrum");
  std::vector<double> pops(rho.rows());
  for (Eigen::Index m = 0; m < rho.rows(); ++m) {
    const auto v = s.eigenvectors.col(m);
    pops[m] = std::real(v.dot(rho * v));
  }
  return detail::finish_decomposition(std::move(pops), s, degeneracy_tol);
}

// Emulates the classical pre-estimation: centered places the approximate
// energies on the true values; worst_case_shift places them adversarially
// while still honoring the bounds.
inline PreEstimate synthesize_preestimate(const Spectrum& s, double m0, double m1,
                                          OffsetMode mode,
                                          double degeneracy_tol = kDefaultDegeneracyTol) {
  if (m0 < 0 || m1 < 0) throw std::invalid_argument("error bounds must be >= 0");
  auto [e0, e1] = first_gap(s, degeneracy_tol);
  PreEstimate pre;
  pre.m0 = m0;
  pre.m1 = m1;
  if (mode == OffsetMode::Centered) {
    pre.e0_approx = e0;
    pre.e1_approx = e1;
  } else {
    pre.e0_approx = e0 + m0;
    pre.e1_approx = e1 - m1;
  }
  return pre;
}

}  // namespace anncert
