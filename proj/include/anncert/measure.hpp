#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "anncert/common.hpp"
#include "anncert/pauli.hpp"

namespace anncert {

struct EnergyMoments {
  double mean = 0.0;      // <H>, GHz
  double variance = 0.0;  // <H^2> - <H>^2, GHz^2, clamped at 0
  std::optional<long> shots;       // absent = exact
  std::optional<double> std_error; // sampling standard error of the mean
};

namespace detail {

// <psi| P |psi> for a single Pauli string, O(2^n).
inline double term_expectation(const Eigen::VectorXcd& psi, const PauliTerm& t) {
  TermAction act(t.factors);
  Complex acc(0, 0);
  const std::uint64_t d = psi.size();
  for (std::uint64_t s = 0; s < d; ++s)
    acc += std::conj(psi(s ^ act.flip_mask)) * act.phase(s) * psi(s);
  return acc.real();
}

// tr(rho P) = sum_s phase(s) rho(s, s ^ flip).
inline double term_expectation(const Eigen::MatrixXcd& rho, const PauliTerm& t) {
  TermAction act(t.factors);
  Complex acc(0, 0);
  const std::uint64_t d = rho.rows();
  for (std::uint64_t s = 0; s < d; ++s)
    acc += act.phase(s) * rho(s, s ^ act.flip_mask);
  return acc.real();
}

inline void check_dim(Eigen::Index state_dim, const PauliHamiltonian& h) {
  if (state_dim != static_cast<Eigen::Index>(h.dim()))
    throw std::invalid_argument("state dimension does not match Hamiltonian");
}

// SplitMix64 step, used to derive independent per-term RNG streams so
// sampling is deterministic regardless of evaluation order.
inline std::uint64_t mix_seed(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace detail

// Term-wise energy expectation, sum_j c_j <P_j>.
template <typename State>
double expectation(const State& state, const PauliHamiltonian& h) {
  detail::check_dim(state.rows(), h);
  double acc = 0.0;
  for (const auto& t : h.terms()) acc += t.coefficient * detail::term_expectation(state, t);
  return acc;
}

// Holds a Hamiltonian together with its symbolically expanded square so
// sweeps do not re-expand H^2 per cell.
class EnergyMeter {
 public:
  explicit EnergyMeter(PauliHamiltonian h) : h_(std::move(h)), h2_(h_.squared()) {}

  const PauliHamiltonian& hamiltonian() const { return h_; }
  const PauliHamiltonian& hamiltonian_squared() const { return h2_; }

  template <typename State>
  EnergyMoments moments(const State& state) const {
    EnergyMoments m;
    m.mean = expectation(state, h_);
    m.variance = expectation(state, h2_) - m.mean * m.mean;
    if (m.variance < -1e-10)
      throw ComputationError("variance " + fmt17(m.variance) + " below clamp tolerance");
    m.variance = std::max(m.variance, 0.0);
    return m;
  }

  // Single-shot sampling model: each Pauli term of H and H^2 is measured
  // shots_per_term times as an i.i.d. +/-1 outcome with the exact Bernoulli
  // mean.  RNG: mt19937_64 seeded per term via SplitMix64 from (seed,
  // stream, term index).
  template <typename State>
  EnergyMoments sample_moments(const State& state, long shots_per_term,
                               std::uint64_t seed) const {
    if (shots_per_term < 1) throw std::invalid_argument("shots_per_term must be >= 1");
    auto sample_ham = [&](const PauliHamiltonian& ham, int stream, double* se_out) {
      double mean = 0.0, var_acc = 0.0;
      std::size_t idx = 0;
      for (const auto& t : ham.terms()) {
        double exact = detail::term_expectation(state, t);
        double p = std::clamp((1.0 + exact) / 2.0, 0.0, 1.0);
        std::mt19937_64 rng(detail::mix_seed(
            detail::mix_seed(seed ^ (std::uint64_t(stream) << 56)) + idx));
        std::binomial_distribution<long> bin(shots_per_term, p);
        long plus = bin(rng);
        double est = 2.0 * double(plus) / double(shots_per_term) - 1.0;
        mean += t.coefficient * est;
        double se = std::sqrt(std::max(0.0, 1.0 - est * est) / double(shots_per_term));
        var_acc += t.coefficient * t.coefficient * se * se;
        ++idx;
      }
      if (se_out) *se_out = std::sqrt(var_acc);
      return mean;
    };
    EnergyMoments m;
    double se = 0.0;
    m.mean = sample_ham(h_, 0, &se);
    double mean_sq = sample_ham(h2_, 1, nullptr);
    m.variance = std::max(mean_sq - m.mean * m.mean, 0.0);
    m.shots = shots_per_term;
    m.std_error = se;
    return m;
  }

 private:
  PauliHamiltonian h_;
  PauliHamiltonian h2_;
};

template <typename State>
EnergyMoments energy_moments(const State& state, const PauliHamiltonian& h) {
  detail::check_dim(state.rows(), h);
  return EnergyMeter(h).moments(state);
}

template <typename State>
EnergyMoments sample_moments(const State& state, const PauliHamiltonian& h,
                             long shots_per_term, std::uint64_t seed) {
  detail::check_dim(state.rows(), h);
  return EnergyMeter(h).sample_moments(state, shots_per_term, seed);
}

}  // namespace anncert
