#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace anncert {

// Bad input data (malformed Hamiltonian files, inconsistent CSV).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical failure: integrator drift, diagonalization breakdown,
// violated conservation law.
class ComputationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// 17 significant digits round-trips any double exactly.
inline std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace anncert
