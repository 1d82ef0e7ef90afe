#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "anncert/common.hpp"

namespace anncert {

using Complex = std::complex<double>;

enum class Axis : std::uint8_t { X = 0, Y = 1, Z = 2 };

inline char axis_char(Axis a) { return a == Axis::X ? 'X' : (a == Axis::Y ? 'Y' : 'Z'); }

// Map from qubit index to Pauli axis; absent index means identity.
using FactorMap = std::map<int, Axis>;

// One weighted Pauli string.  An empty factor map is the identity term.
struct PauliTerm {
  double coefficient = 0.0;
  FactorMap factors;
};

// Pauli string with a complex weight, the closure of term products.
struct PhasedTerm {
  Complex coefficient;
  FactorMap factors;
};

// Canonical ordering: identity first, then lexicographic over
// (qubit index, axis code) pairs.
inline bool factor_map_less(const FactorMap& a, const FactorMap& b) {
  auto key = [](const std::pair<const int, Axis>& p) {
    return std::pair<int, int>(p.first, static_cast<int>(p.second));
  };
  return std::lexicographical_compare(
      a.begin(), a.end(), b.begin(), b.end(),
      [&](const auto& x, const auto& y) { return key(x) < key(y); });
}

// Single-qubit product sigma^a sigma^b = delta_ab I + i eps_abc sigma^c.
// Returns {phase, axis}; axis absent (nullopt encoded as -1) means identity.
inline std::pair<Complex, int> axis_product(Axis a, Axis b) {
  if (a == b) return {Complex(1, 0), -1};
  int ia = static_cast<int>(a), ib = static_cast<int>(b);
  // cyclic (X,Y,Z): eps = +1 when (ia+1)%3 == ib
  int ic = 3 - ia - ib;
  if ((ia + 1) % 3 == ib) return {Complex(0, 1), ic};
  return {Complex(0, -1), ic};
}

inline PhasedTerm multiply_terms(const PauliTerm& a, const PauliTerm& b) {
  PhasedTerm out;
  out.coefficient = Complex(a.coefficient * b.coefficient, 0);
  auto ia = a.factors.begin();
  auto ib = b.factors.begin();
  while (ia != a.factors.end() || ib != b.factors.end()) {
    if (ib == b.factors.end() || (ia != a.factors.end() && ia->first < ib->first)) {
      out.factors.emplace(*ia);
      ++ia;
    } else if (ia == a.factors.end() || ib->first < ia->first) {
      out.factors.emplace(*ib);
      ++ib;
    } else {
      auto [phase, axis] = axis_product(ia->second, ib->second);
      out.coefficient *= phase;
      if (axis >= 0) out.factors.emplace(ia->first, static_cast<Axis>(axis));
      ++ia;
      ++ib;
    }
  }
  return out;
}

inline PhasedTerm multiply_terms(const PhasedTerm& a, const PhasedTerm& b) {
  PauliTerm ta{1.0, a.factors}, tb{1.0, b.factors};
  PhasedTerm out = multiply_terms(ta, tb);
  out.coefficient *= a.coefficient * b.coefficient;
  return out;
}

// Weighted sum of Pauli strings with real coefficients; always kept in
// canonical form (sorted, duplicates merged, negligible terms dropped).
class PauliHamiltonian {
 public:
  static constexpr int kMaxQubits = 12;          // dense-matrix cap
  static constexpr double kMergeTol = 1e-14;     // drop |c| below this after merging

  PauliHamiltonian(int num_qubits, std::vector<PauliTerm> terms)
      : num_qubits_(num_qubits) {
    if (num_qubits < 1) throw std::invalid_argument("num_qubits must be >= 1");
    for (const auto& t : terms) {
      if (!std::isfinite(t.coefficient))
        throw std::invalid_argument("non-finite coefficient");
      if (!t.factors.empty()) {
        if (t.factors.begin()->first < 0)
          throw std::invalid_argument("negative qubit index");
        if (t.factors.rbegin()->first >= num_qubits)
          throw std::invalid_argument("qubit index exceeds num_qubits");
      }
    }
    std::map<FactorMap, double, decltype(&factor_map_less)> merged(&factor_map_less);
    for (auto& t : terms) merged[t.factors] += t.coefficient;
    for (auto& [f, c] : merged)
      if (std::abs(c) >= kMergeTol) terms_.push_back(PauliTerm{c, f});
  }

  int num_qubits() const { return num_qubits_; }
  const std::vector<PauliTerm>& terms() const { return terms_; }
  std::size_t dim() const { return std::size_t{1} << num_qubits_; }

  bool operator==(const PauliHamiltonian& o) const {
    if (num_qubits_ != o.num_qubits_ || terms_.size() != o.terms_.size()) return false;
    for (std::size_t i = 0; i < terms_.size(); ++i)
      if (terms_[i].coefficient != o.terms_[i].coefficient ||
          terms_[i].factors != o.terms_[i].factors)
        return false;
    return true;
  }

  Eigen::MatrixXcd to_matrix() const;
  PauliHamiltonian squared() const;

  static PauliHamiltonian parse(std::string_view text);
  std::string serialize() const;

 private:
  int num_qubits_;
  std::vector<PauliTerm> terms_;
};

namespace detail {

// Action of a Pauli string on a computational basis state (qubit q = bit q):
// P|s> = phase(s) |s ^ flip_mask>.
struct TermAction {
  std::uint64_t flip_mask = 0;
  std::vector<int> z_bits;  // qubits carrying Z
  std::vector<int> y_bits;  // qubits carrying Y
  explicit TermAction(const FactorMap& f) {
    for (auto [q, a] : f) {
      switch (a) {
        case Axis::X: flip_mask |= std::uint64_t{1} << q; break;
        case Axis::Y: flip_mask |= std::uint64_t{1} << q; y_bits.push_back(q); break;
        case Axis::Z: z_bits.push_back(q); break;
      }
    }
  }
  Complex phase(std::uint64_t s) const {
    Complex p(1, 0);
    for (int q : z_bits)
      if ((s >> q) & 1) p = -p;
    for (int q : y_bits)
      p *= ((s >> q) & 1) ? Complex(0, -1) : Complex(0, 1);
    return p;
  }
};

}  // namespace detail

inline Eigen::MatrixXcd PauliHamiltonian::to_matrix() const {
  if (num_qubits_ > kMaxQubits)
    throw ComputationError("dense realization capped at " +
                           std::to_string(kMaxQubits) + " qubits");
  const std::size_t d = dim();
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(d, d);
  for (const auto& t : terms_) {
    detail::TermAction act(t.factors);
    for (std::uint64_t s = 0; s < d; ++s)
      m(s ^ act.flip_mask, s) += t.coefficient * act.phase(s);
  }
  return m;
}

inline PauliHamiltonian PauliHamiltonian::squared() const {
  std::map<FactorMap, Complex, decltype(&factor_map_less)> acc(&factor_map_less);
  for (const auto& a : terms_)
    for (const auto& b : terms_) {
      PhasedTerm p = multiply_terms(a, b);
      acc[p.factors] += p.coefficient;
    }
  std::vector<PauliTerm> out;
  for (auto& [f, c] : acc) {
    if (std::abs(c.imag()) > 1e-12)
      throw ComputationError("residual imaginary coefficient in H^2: " +
                             fmt17(c.imag()));
    out.push_back(PauliTerm{c.real(), f});
  }
  return PauliHamiltonian(num_qubits_, std::move(out));
}

inline PauliHamiltonian PauliHamiltonian::parse(std::string_view text) {
  std::vector<PauliTerm> terms;
  int header_qubits = 0;
  int max_index = -1;
  int line_no = 0;
  std::size_t pos = 0;
  auto fail = [&](const std::string& what) {
    throw ParseError("line " + std::to_string(line_no) + ": " + what);
  };
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    std::string_view line = text.substr(pos, eol == std::string_view::npos
                                                 ? std::string_view::npos
                                                 : eol - pos);
    pos = (eol == std::string_view::npos) ? text.size() + 1 : eol + 1;
    ++line_no;
    if (auto h = line.find('#'); h != std::string_view::npos) line = line.substr(0, h);
    std::vector<std::string> tok;
    {
      std::istringstream ss{std::string(line)};
      std::string w;
      while (ss >> w) tok.push_back(w);
    }
    if (tok.empty()) continue;
    if (tok[0] == "qubits") {
      if (tok.size() != 2) fail("expected 'qubits <n>'");
      try {
        header_qubits = std::stoi(tok[1]);
      } catch (...) {
        fail("bad qubit count '" + tok[1] + "'");
      }
      if (header_qubits < 1) fail("qubit count must be >= 1");
      continue;
    }
    PauliTerm t;
    {
      const std::string& c = tok[0];
      char* end = nullptr;
      t.coefficient = std::strtod(c.c_str(), &end);
      if (end != c.c_str() + c.size()) fail("bad coefficient '" + c + "'");
      if (!std::isfinite(t.coefficient)) fail("non-finite coefficient '" + c + "'");
    }
    for (std::size_t i = 1; i < tok.size(); ++i) {
      const std::string& f = tok[i];
      char a = static_cast<char>(std::toupper(static_cast<unsigned char>(f[0])));
      if (f.size() < 2 || (a != 'X' && a != 'Y' && a != 'Z'))
        fail("bad factor '" + f + "' (expected e.g. Z3)");
      int idx = 0;
      auto [p, ec] = std::from_chars(f.data() + 1, f.data() + f.size(), idx);
      if (ec != std::errc{} || p != f.data() + f.size() || idx < 0)
        fail("bad qubit index in '" + f + "'");
      Axis axis = a == 'X' ? Axis::X : (a == 'Y' ? Axis::Y : Axis::Z);
      if (!t.factors.emplace(idx, axis).second)
        fail("duplicate qubit index " + std::to_string(idx));
      max_index = std::max(max_index, idx);
    }
    terms.push_back(std::move(t));
  }
  if (terms.empty() && header_qubits == 0)
    throw ParseError("no terms and no 'qubits' header");
  int n = std::max(header_qubits, max_index + 1);
  if (n < 1) n = 1;
  if (header_qubits > 0 && max_index >= header_qubits)
    throw ParseError("qubit index " + std::to_string(max_index) +
                     " exceeds declared count " + std::to_string(header_qubits));
  return PauliHamiltonian(n, std::move(terms));
}

inline std::string PauliHamiltonian::serialize() const {
  std::string out = "qubits " + std::to_string(num_qubits_) + "\n";
  for (const auto& t : terms_) {
    out += fmt17(t.coefficient);
    for (auto [q, a] : t.factors) {
      out += ' ';
      out += axis_char(a);
      out += std::to_string(q);
    }
    out += '\n';
  }
  return out;
}

}  // namespace anncert
