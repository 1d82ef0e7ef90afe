#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "anncert/certify.hpp"
#include "anncert/common.hpp"
#include "anncert/dynamics.hpp"
#include "anncert/measure.hpp"
#include "anncert/parallel.hpp"
#include "anncert/pauli.hpp"
#include "anncert/spectra.hpp"

namespace anncert {

struct SweepGrid {
  std::vector<double> annealing_times;  // ns, ascending
  std::vector<double> gammas;           // GHz, ascending, may start at 0
  std::vector<double> halfwidths;       // (dM0+dM1)/2, GHz, ascending

  static std::vector<double> log_spaced(double lo, double hi, int n) {
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i)
      v[i] = n == 1 ? lo : lo * std::pow(hi / lo, double(i) / (n - 1));
    return v;
  }

  // n points in (0, hi], evenly spaced.
  static std::vector<double> linear_upper(double hi, int n) {
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = hi * double(i + 1) / n;
    return v;
  }

  // T: 40 log points in [1, 2000] ns; gamma: {0} plus 25 log points in
  // [1e-5, 1e-1] GHz; halfwidths: 30 linear points up to 1.2 * gap/2 so
  // the grid straddles the always-fail boundary.
  static SweepGrid defaults(double gap) {
    SweepGrid g;
    g.annealing_times = log_spaced(1.0, 2000.0, 40);
    g.gammas.push_back(0.0);
    for (double x : log_spaced(1e-5, 1e-1, 25)) g.gammas.push_back(x);
    g.halfwidths = linear_upper(1.2 * gap / 2.0, 30);
    return g;
  }
};

struct SweepCell {
  double T = 0.0;                // ns
  double gamma = 0.0;            // GHz
  double mean = 0.0;             // GHz
  double variance = 0.0;         // GHz^2
  double epsilon_squared = 0.0;  // oracle ground-population deficit
  bool optimal = false;          // T minimizes mean at this gamma
};

// One Lindblad anneal followed by exact measurement and the spectral oracle.
inline SweepCell run_cell(const PauliHamiltonian& hp, const PauliHamiltonian& hd,
                          const EnergyMeter& meter, const Spectrum& spectrum,
                          double T, double gamma, int steps) {
  AnnealConfig cfg;
  cfg.annealing_time = T;
  cfg.gamma = gamma;
  cfg.steps = steps;
  Eigen::MatrixXcd rho = evolve_open(hp, hd, cfg);
  EnergyMoments m = meter.moments(rho);
  SweepCell cell;
  cell.T = T;
  cell.gamma = gamma;
  cell.mean = m.mean;
  cell.variance = m.variance;
  cell.epsilon_squared = decompose(rho, spectrum).epsilon_squared;
  return cell;
}

// Full (gamma, T) grid; one optimal flag per gamma, ties toward smaller T.
inline std::vector<SweepCell> time_sweep(const PauliHamiltonian& hp,
                                         const PauliHamiltonian& hd,
                                         const std::vector<double>& gammas,
                                         const std::vector<double>& annealing_times,
                                         int steps = 0, int threads = 1) {
  if (gammas.empty() || annealing_times.empty())
    throw std::invalid_argument("empty sweep grid");
  EnergyMeter meter(hp);
  Spectrum spectrum = diagonalize(hp.to_matrix());
  const std::size_t nt = annealing_times.size();
  std::vector<SweepCell> cells(gammas.size() * nt);
  parallel_for(cells.size(), threads, [&](std::size_t i) {
    std::size_t gi = i / nt, ti = i % nt;
    cells[i] = run_cell(hp, hd, meter, spectrum, annealing_times[ti], gammas[gi], steps);
  });
  for (std::size_t gi = 0; gi < gammas.size(); ++gi) {
    std::size_t best = gi * nt;
    for (std::size_t ti = 1; ti < nt; ++ti)
      if (cells[gi * nt + ti].mean < cells[best].mean) best = gi * nt + ti;
    cells[best].optimal = true;
  }
  return cells;
}

// Memoizes the optimal-T run per gamma.  Grid gammas use the full T grid;
// bisection refinements reuse a T window around the bracketing optima,
// expanded until the minimum is interior.
class OptimalRunEvaluator {
 public:
  struct Run {
    double gamma = 0.0;
    double T_opt = 0.0;
    double mean = 0.0;
    double variance = 0.0;
    int t_index = 0;
  };

  OptimalRunEvaluator(PauliHamiltonian hp, PauliHamiltonian hd,
                      std::vector<double> annealing_times, int steps = 0,
                      int threads = 1)
      : hp_(std::move(hp)),
        hd_(std::move(hd)),
        times_(std::move(annealing_times)),
        steps_(steps),
        threads_(threads),
        meter_(hp_),
        spectrum_(diagonalize(hp_.to_matrix())) {
    if (times_.empty()) throw std::invalid_argument("empty annealing-time grid");
  }

  const Spectrum& spectrum() const { return spectrum_; }
  const std::vector<double>& annealing_times() const { return times_; }

  const Run& at_gamma(double gamma) {
    auto it = cache_.find(gamma);
    if (it != cache_.end()) return it->second;
    return cache_.emplace(gamma, evaluate(gamma, 0, int(times_.size()) - 1)).first->second;
  }

  const Run& refined(double gamma, const Run& lo, const Run& hi) {
    auto it = cache_.find(gamma);
    if (it != cache_.end()) return it->second;
    int i0 = std::max(0, std::min(lo.t_index, hi.t_index) - 2);
    int i1 = std::min(int(times_.size()) - 1, std::max(lo.t_index, hi.t_index) + 2);
    return cache_.emplace(gamma, evaluate(gamma, i0, i1)).first->second;
  }

 private:
  Run evaluate(double gamma, int i0, int i1) {
    std::map<int, SweepCell> computed;
    auto ensure = [&](int lo, int hi) {
      std::vector<int> missing;
      for (int i = lo; i <= hi; ++i)
        if (!computed.count(i)) missing.push_back(i);
      std::vector<SweepCell> out(missing.size());
      parallel_for(missing.size(), threads_, [&](std::size_t k) {
        out[k] = run_cell(hp_, hd_, meter_, spectrum_, times_[missing[k]], gamma, steps_);
      });
      for (std::size_t k = 0; k < missing.size(); ++k) computed[missing[k]] = out[k];
    };
    ensure(i0, i1);
    for (;;) {
      int best = i0;
      for (int i = i0; i <= i1; ++i)
        if (computed[i].mean < computed[best].mean) best = i;
      bool grow_left = best == i0 && i0 > 0;
      bool grow_right = best == i1 && i1 < int(times_.size()) - 1;
      if (!grow_left && !grow_right) {
        Run r;
        r.gamma = gamma;
        r.T_opt = times_[best];
        r.mean = computed[best].mean;
        r.variance = computed[best].variance;
        r.t_index = best;
        return r;
      }
      if (grow_left) i0 = std::max(0, i0 - 2);
      if (grow_right) i1 = std::min(int(times_.size()) - 1, i1 + 2);
      ensure(i0, i1);
    }
  }

  PauliHamiltonian hp_, hd_;
  std::vector<double> times_;
  int steps_;
  int threads_;
  EnergyMeter meter_;
  Spectrum spectrum_;
  std::map<double, Run> cache_;
};

enum class MapPredicate { Applicability, Improvement };

struct ThresholdPoint {
  enum class Status { Ok, AlwaysFails, NotBracketed };
  double halfwidth = 0.0;
  double gamma_threshold = std::numeric_limits<double>::quiet_NaN();
  Status status = Status::NotBracketed;
};

inline const char* status_name(ThresholdPoint::Status s) {
  switch (s) {
    case ThresholdPoint::Status::Ok: return "ok";
    case ThresholdPoint::Status::AlwaysFails: return "always_fails";
    default: return "not_bracketed";
  }
}

// Largest gamma at which the optimal-T run still satisfies the predicate,
// per halfwidth; the boundary between adjacent grid gammas is located by
// bisection to 1e-2 relative precision.
inline std::vector<ThresholdPoint> threshold_map(OptimalRunEvaluator& eval,
                                                 const std::vector<double>& gammas,
                                                 const std::vector<double>& halfwidths,
                                                 OffsetMode mode, MapPredicate pred) {
  if (gammas.empty() || halfwidths.empty())
    throw std::invalid_argument("empty threshold-map grid");
  auto [e0, e1] = first_gap(eval.spectrum());
  const double half_gap = 0.5 * (e1 - e0);

  std::vector<ThresholdPoint> out;
  for (double hw : halfwidths) {
    ThresholdPoint pt;
    pt.halfwidth = hw;
    if (mode == OffsetMode::Centered && hw >= half_gap) {
      pt.status = ThresholdPoint::Status::AlwaysFails;
      out.push_back(pt);
      continue;
    }
    PreEstimate pre = synthesize_preestimate(eval.spectrum(), hw, hw, mode);
    const double thr = certification_threshold(pre);
    auto passes = [&](const OptimalRunEvaluator::Run& r) {
      if (!(r.mean < thr)) return false;
      if (pred == MapPredicate::Improvement)
        return std::sqrt(std::max(r.variance, 0.0)) < hw;  // dM0 = halfwidth
      return true;
    };

    std::vector<bool> pass(gammas.size());
    for (std::size_t i = 0; i < gammas.size(); ++i)
      pass[i] = passes(eval.at_gamma(gammas[i]));

    bool monotone = true;
    for (std::size_t i = 1; i < gammas.size(); ++i)
      if (pass[i] && !pass[i - 1]) monotone = false;
    if (!monotone) {
      // grid-scan resolution only
      for (std::size_t i = gammas.size(); i-- > 0;)
        if (pass[i]) {
          pt.gamma_threshold = gammas[i];
          pt.status = ThresholdPoint::Status::Ok;
          break;
        }
      out.push_back(pt);
      continue;
    }
    if (!pass.front() || pass.back()) {
      pt.status = ThresholdPoint::Status::NotBracketed;
      out.push_back(pt);
      continue;
    }
    std::size_t last_pass = 0;
    while (last_pass + 1 < gammas.size() && pass[last_pass + 1]) ++last_pass;
    double lo = gammas[last_pass], hi = gammas[last_pass + 1];
    OptimalRunEvaluator::Run run_lo = eval.at_gamma(lo);
    OptimalRunEvaluator::Run run_hi = eval.at_gamma(hi);
    for (int iter = 0; iter < 60; ++iter) {
      if (lo > 0 && (hi - lo) <= 1e-2 * hi) break;
      if (lo == 0 && hi < 1e-8) break;
      double mid = lo > 0 ? std::sqrt(lo * hi) : 0.5 * hi;
      const auto& run_mid = eval.refined(mid, run_lo, run_hi);
      if (passes(run_mid)) {
        lo = mid;
        run_lo = run_mid;
      } else {
        hi = mid;
        run_hi = run_mid;
      }
    }
    pt.gamma_threshold = lo;
    pt.status = ThresholdPoint::Status::Ok;
    out.push_back(pt);
  }
  return out;
}

struct ErrorBarRow {
  double gamma = 0.0;      // GHz
  double T_opt = 0.0;      // ns
  double mean = 0.0;       // GHz
  double error_bar = 0.0;  // GHz
  bool certified = false;
  double e0_exact = 0.0;   // GHz
};

// Per-gamma optimal-T energy with the variance-derived error bar and the
// certification verdict against a fixed pre-estimation.
inline std::vector<ErrorBarRow> errorbar_table(OptimalRunEvaluator& eval,
                                               const std::vector<double>& gammas,
                                               const PreEstimate& pre) {
  double e0 = eval.spectrum().eigenvalues(0);
  std::vector<ErrorBarRow> rows;
  for (double g : gammas) {
    const auto& run = eval.at_gamma(g);
    EnergyMoments m;
    m.mean = run.mean;
    m.variance = run.variance;
    CertificationReport rep = certify(m, pre);
    ErrorBarRow row;
    row.gamma = g;
    row.T_opt = run.T_opt;
    row.mean = run.mean;
    row.error_bar = rep.error_bar;
    row.certified = rep.variance_is_bound;
    row.e0_exact = e0;
    if (row.certified &&
        !(e0 >= row.mean - row.error_bar - 1e-9 && e0 <= row.mean + 1e-9))
      throw ComputationError("certified row violates the error-bar guarantee at gamma " +
                             fmt17(g));
    rows.push_back(row);
  }
  return rows;
}

inline std::vector<ErrorBarRow> errorbar_table(const PauliHamiltonian& hp,
                                               const PauliHamiltonian& hd,
                                               const std::vector<double>& annealing_times,
                                               const std::vector<double>& gammas,
                                               int steps, const PreEstimate& pre,
                                               int threads = 1) {
  OptimalRunEvaluator eval(hp, hd, annealing_times, steps, threads);
  return errorbar_table(eval, gammas, pre);
}

// ---------------------------------------------------------------------------
// CSV schemas (header mandatory, '.' decimal, 17 significant digits)

namespace csv {

inline const char* bool_str(bool b) { return b ? "true" : "false"; }

inline std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, ',')) out.push_back(cur);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

inline double to_double(const std::string& s) {
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) throw ParseError("bad number '" + s + "'");
  return v;
}

inline bool to_bool(const std::string& s) {
  if (s == "true") return true;
  if (s == "false") return false;
  throw ParseError("bad boolean '" + s + "'");
}

inline std::vector<std::vector<std::string>> parse_table(const std::string& text,
                                                         const std::string& header,
                                                         std::size_t fields) {
  std::istringstream ss(text);
  std::string line;
  if (!std::getline(ss, line) || line != header)
    throw ParseError("missing or wrong CSV header (expected '" + header + "')");
  std::vector<std::vector<std::string>> rows;
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    auto f = split_line(line);
    if (f.size() != fields)
      throw ParseError("expected " + std::to_string(fields) + " fields, got " +
                       std::to_string(f.size()));
    rows.push_back(std::move(f));
  }
  return rows;
}

}  // namespace csv

inline constexpr const char* kTimeSweepHeader =
    "gamma_ghz,T_ns,mean_ghz,variance_ghz2,epsilon_squared,optimal";
inline constexpr const char* kThresholdMapHeader =
    "halfwidth_ghz,gamma_threshold_ghz,status";
inline constexpr const char* kErrorBarHeader =
    "gamma_ghz,T_ns_opt,mean_ghz,error_bar_ghz,certified,e0_exact_ghz";

inline std::string emit_time_sweep(const std::vector<SweepCell>& cells) {
  std::string out = std::string(kTimeSweepHeader) + "\n";
  for (const auto& c : cells)
    out += fmt17(c.gamma) + "," + fmt17(c.T) + "," + fmt17(c.mean) + "," +
           fmt17(c.variance) + "," + fmt17(c.epsilon_squared) + "," +
           csv::bool_str(c.optimal) + "\n";
  return out;
}

inline std::vector<SweepCell> parse_time_sweep(const std::string& text) {
  std::vector<SweepCell> cells;
  for (const auto& f : csv::parse_table(text, kTimeSweepHeader, 6)) {
    SweepCell c;
    c.gamma = csv::to_double(f[0]);
    c.T = csv::to_double(f[1]);
    c.mean = csv::to_double(f[2]);
    c.variance = csv::to_double(f[3]);
    c.epsilon_squared = csv::to_double(f[4]);
    c.optimal = csv::to_bool(f[5]);
    cells.push_back(c);
  }
  return cells;
}

inline std::string emit_threshold_map(const std::vector<ThresholdPoint>& pts) {
  std::string out = std::string(kThresholdMapHeader) + "\n";
  for (const auto& p : pts)
    out += fmt17(p.halfwidth) + "," + fmt17(p.gamma_threshold) + "," +
           status_name(p.status) + "\n";
  return out;
}

inline std::vector<ThresholdPoint> parse_threshold_map(const std::string& text) {
  std::vector<ThresholdPoint> pts;
  for (const auto& f : csv::parse_table(text, kThresholdMapHeader, 3)) {
    ThresholdPoint p;
    p.halfwidth = csv::to_double(f[0]);
    p.gamma_threshold = csv::to_double(f[1]);
    if (f[2] == "ok")
      p.status = ThresholdPoint::Status::Ok;
    else if (f[2] == "always_fails")
      p.status = ThresholdPoint::Status::AlwaysFails;
    else if (f[2] == "not_bracketed")
      p.status = ThresholdPoint::Status::NotBracketed;
    else
      throw ParseError("bad status '" + f[2] + "'");
    pts.push_back(p);
  }
  return pts;
}

inline std::string emit_errorbar_table(const std::vector<ErrorBarRow>& rows) {
  std::string out = std::string(kErrorBarHeader) + "\n";
  for (const auto& r : rows)
    out += fmt17(r.gamma) + "," + fmt17(r.T_opt) + "," + fmt17(r.mean) + "," +
           fmt17(r.error_bar) + "," + csv::bool_str(r.certified) + "," +
           fmt17(r.e0_exact) + "\n";
  return out;
}

inline std::vector<ErrorBarRow> parse_errorbar_table(const std::string& text) {
  std::vector<ErrorBarRow> rows;
  for (const auto& f : csv::parse_table(text, kErrorBarHeader, 6)) {
    ErrorBarRow r;
    r.gamma = csv::to_double(f[0]);
    r.T_opt = csv::to_double(f[1]);
    r.mean = csv::to_double(f[2]);
    r.error_bar = csv::to_double(f[3]);
    r.certified = csv::to_bool(f[4]);
    r.e0_exact = csv::to_double(f[5]);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace anncert
