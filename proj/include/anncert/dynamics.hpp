#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "anncert/common.hpp"
#include "anncert/pauli.hpp"
#include "anncert/spectra.hpp"

namespace anncert {

// Time unit is ns; energies in GHz are treated as angular frequencies in
// rad/ns, i.e. d/dt psi = -i H psi with H numerically equal to the GHz
// coefficients.  This convention is fixed project-wide.
struct AnnealConfig {
  double annealing_time = 0.0;   // T, ns
  double gamma = 0.0;            // dephasing rate, GHz
  int steps = 0;                 // RK4 steps; 0 = choose by step rule
  Axis lindblad_axis = Axis::Z;

  void validate() const {
    if (!(annealing_time > 0)) throw std::invalid_argument("annealing_time must be > 0");
    if (gamma < 0) throw std::invalid_argument("gamma must be >= 0");
    if (steps != 0 && steps < 10) throw std::invalid_argument("steps must be >= 10");
  }
};

inline Eigen::VectorXcd plus_state(int n) {
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  const Eigen::Index d = Eigen::Index{1} << n;
  return Eigen::VectorXcd::Constant(d, std::complex<double>(1.0 / std::sqrt(double(d)), 0));
}

// H_D = -sum_i sigma^x_i, ground state |+...+> at energy -n.
inline PauliHamiltonian default_driver(int n) {
  std::vector<PauliTerm> terms;
  for (int i = 0; i < n; ++i) terms.push_back(PauliTerm{-1.0, {{i, Axis::X}}});
  return PauliHamiltonian(n, std::move(terms));
}

// Linear ramp (t/T) H_P + (1 - t/T) H_D.
inline Eigen::MatrixXcd schedule_hamiltonian(const PauliHamiltonian& hp,
                                             const PauliHamiltonian& hd, double t,
                                             double T) {
  if (hp.num_qubits() != hd.num_qubits())
    throw std::invalid_argument("problem and driver act on different qubit counts");
  if (!(t >= 0 && t <= T)) throw std::invalid_argument("t outside [0, T]");
  double s = t / T;
  return s * hp.to_matrix() + (1.0 - s) * hd.to_matrix();
}

inline double spectral_norm(const Eigen::MatrixXcd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

// Step rule: max_t ||H(t)|| * dt <= 0.05; the schedule is a convex
// combination so the max is bounded by the endpoint norms.  The dissipator
// adds a relaxation scale 2*gamma*n which enters the same budget.
inline int default_step_count(const Eigen::MatrixXcd& hp_mat,
                              const Eigen::MatrixXcd& hd_mat, double T,
                              double gamma = 0.0, int num_qubits = 0) {
  double hmax = std::max(spectral_norm(hp_mat), spectral_norm(hd_mat));
  double rate = hmax + 2.0 * gamma * num_qubits;
  int steps = static_cast<int>(std::ceil(T * rate / 0.05));
  return std::max(steps, 10);
}

// Closed-system default: additionally bound the accumulated RK4 amplitude
// error (~ steps * (w dt)^6 / 144 at frequency w) below 1e-7 so the final
// norm stays within the 1e-6 renormalization gate even for long anneals.
inline int default_closed_step_count(const Eigen::MatrixXcd& hp_mat,
                                     const Eigen::MatrixXcd& hd_mat, double T) {
  int steps = default_step_count(hp_mat, hd_mat, T);
  double hmax = std::max(spectral_norm(hp_mat), spectral_norm(hd_mat));
  if (hmax > 0) {
    double h_drift = std::pow(144.0 * 1e-7 / (T * std::pow(hmax, 6.0)), 0.2);
    steps = std::max(steps, static_cast<int>(std::ceil(T / h_drift)));
  }
  return steps;
}

namespace detail {

// Signed-permutation action of a single Pauli: L e_k = phase[k] e_perm[k].
struct PauliOpTable {
  std::vector<std::uint64_t> perm;
  std::vector<Complex> phase;
  PauliOpTable(int qubit, Axis axis, std::size_t dim) : perm(dim), phase(dim) {
    const std::uint64_t bit = std::uint64_t{1} << qubit;
    for (std::uint64_t k = 0; k < dim; ++k) {
      switch (axis) {
        case Axis::X:
          perm[k] = k ^ bit;
          phase[k] = Complex(1, 0);
          break;
        case Axis::Y:
          perm[k] = k ^ bit;
          phase[k] = (k & bit) ? Complex(0, -1) : Complex(0, 1);
          break;
        case Axis::Z:
          perm[k] = k;
          phase[k] = (k & bit) ? Complex(-1, 0) : Complex(1, 0);
          break;
      }
    }
  }
};

struct ScheduleMatrices {
  Eigen::MatrixXcd hp, hd;
  double T;
  void blend(double t, Eigen::MatrixXcd& out) const {
    double s = t / T;
    out = s * hp;
    out.noalias() += (1.0 - s) * hd;
  }
};

}  // namespace detail

inline Eigen::VectorXcd evolve_closed(const PauliHamiltonian& hp,
                                      const PauliHamiltonian& hd,
                                      const AnnealConfig& cfg,
                                      const Eigen::VectorXcd* initial = nullptr) {
  cfg.validate();
  if (cfg.gamma != 0.0)
    throw std::invalid_argument("evolve_closed requires gamma == 0; use evolve_open");
  if (hp.num_qubits() != hd.num_qubits())
    throw std::invalid_argument("problem and driver act on different qubit counts");
  detail::ScheduleMatrices sched{hp.to_matrix(), hd.to_matrix(), cfg.annealing_time};
  const int steps =
      cfg.steps > 0 ? cfg.steps
                    : default_closed_step_count(sched.hp, sched.hd, cfg.annealing_time);
  const double h = cfg.annealing_time / steps;
  const Complex mi(0, -1);

  Eigen::VectorXcd psi = initial ? *initial : plus_state(hp.num_qubits());
  if (psi.size() != static_cast<Eigen::Index>(hp.dim()))
    throw std::invalid_argument("initial state dimension mismatch");
  Eigen::MatrixXcd H(psi.size(), psi.size());
  Eigen::VectorXcd k1(psi.size()), k2(psi.size()), k3(psi.size()), k4(psi.size()),
      tmp(psi.size());
  for (int i = 0; i < steps; ++i) {
    double t = i * h;
    sched.blend(t, H);
    k1.noalias() = mi * (H * psi);
    sched.blend(t + 0.5 * h, H);
    tmp = psi + (0.5 * h) * k1;
    k2.noalias() = mi * (H * tmp);
    tmp = psi + (0.5 * h) * k2;
    k3.noalias() = mi * (H * tmp);
    sched.blend(t + h, H);
    tmp = psi + h * k3;
    k4.noalias() = mi * (H * tmp);
    psi += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  double norm = psi.norm();
  if (!(std::abs(norm - 1.0) <= 1e-6))
    throw ComputationError("norm drift " + fmt17(norm - 1.0) +
                           " exceeds 1e-6; increase steps");
  psi /= norm;
  return psi;
}

// Lindblad master equation with one dephasing operator per qubit at a
// uniform rate:
//   d rho/dt = -i [H(t), rho] + gamma sum_n (L_n rho L_n - rho),
// L_n the chosen Pauli on qubit n (L_n^2 = I, so this is the standard
// dissipator in closed form).
inline Eigen::MatrixXcd evolve_open(const PauliHamiltonian& hp,
                                    const PauliHamiltonian& hd,
                                    const AnnealConfig& cfg) {
  cfg.validate();
  if (hp.num_qubits() != hd.num_qubits())
    throw std::invalid_argument("problem and driver act on different qubit counts");
  const int n = hp.num_qubits();
  const std::size_t d = hp.dim();
  detail::ScheduleMatrices sched{hp.to_matrix(), hd.to_matrix(), cfg.annealing_time};
  const int steps = cfg.steps > 0
                        ? cfg.steps
                        : default_step_count(sched.hp, sched.hd, cfg.annealing_time,
                                             cfg.gamma, n);
  const double h = cfg.annealing_time / steps;
  const Complex mi(0, -1);

  std::vector<detail::PauliOpTable> ops;
  if (cfg.gamma > 0)
    for (int q = 0; q < n; ++q) ops.emplace_back(q, cfg.lindblad_axis, d);

  Eigen::VectorXcd psi0 = plus_state(n);
  Eigen::MatrixXcd rho = psi0 * psi0.adjoint();
  Eigen::MatrixXcd H(d, d), k1(d, d), k2(d, d), k3(d, d), k4(d, d), tmp(d, d);

  auto rhs = [&](const Eigen::MatrixXcd& r, Eigen::MatrixXcd& out) {
    out.noalias() = H * r;
    out.noalias() -= r * H;
    out *= mi;
    if (cfg.gamma > 0) {
      for (const auto& op : ops)
        for (std::size_t j = 0; j < d; ++j)
          for (std::size_t i = 0; i < d; ++i)
            out(i, j) += cfg.gamma * op.phase[op.perm[i]] *
                         r(op.perm[i], op.perm[j]) * op.phase[j];
      out -= (cfg.gamma * n) * r;
    }
  };

  for (int i = 0; i < steps; ++i) {
    double t = i * h;
    sched.blend(t, H);
    rhs(rho, k1);
    sched.blend(t + 0.5 * h, H);
    tmp = rho + (0.5 * h) * k1;
    rhs(tmp, k2);
    tmp = rho + (0.5 * h) * k2;
    rhs(tmp, k3);
    sched.blend(t + h, H);
    tmp = rho + h * k3;
    rhs(tmp, k4);
    rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }

  double tr = rho.trace().real();
  if (!(std::abs(tr - 1.0) <= 1e-6))
    throw ComputationError("trace drift " + fmt17(tr - 1.0) +
                           " exceeds 1e-6; increase steps");
  double herm = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
  if (herm > 1e-8)
    throw ComputationError("Hermiticity violation " + fmt17(herm));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho, Eigen::EigenvaluesOnly);
  double min_eig = es.eigenvalues().minCoeff();
  if (min_eig < -1e-6)
    throw ComputationError("positivity violation: min eigenvalue " + fmt17(min_eig));
  return rho;
}

}  // namespace anncert
