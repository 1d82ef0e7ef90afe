// anncert: quantum-annealing energy estimation with certified error bars.
//
// Subcommands: spectrum, anneal, certify, sweep-time, threshold-map,
// errorbar-table, verify-theorem1.  Exit codes: 0 success, 1 usage error,
// 2 computation error, 3 certification failed (certify only).

#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "anncert/certify.hpp"
#include "anncert/common.hpp"
#include "anncert/dynamics.hpp"
#include "anncert/experiments.hpp"
#include "anncert/measure.hpp"
#include "anncert/parallel.hpp"
#include "anncert/pauli.hpp"
#include "anncert/spectra.hpp"

namespace {

using namespace anncert;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_output(const std::string& path, const std::string& content) {
  if (path.empty()) {
    std::cout << content;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write file '" + path + "'");
  out << content;
}

PauliHamiltonian load_hamiltonian(const std::string& path) {
  return PauliHamiltonian::parse(read_file(path));
}

Axis parse_axis(const std::string& s) {
  if (s == "X" || s == "x") return Axis::X;
  if (s == "Y" || s == "y") return Axis::Y;
  if (s == "Z" || s == "z") return Axis::Z;
  throw UsageError("bad axis '" + s + "' (expected X, Y or Z)");
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                        (s.front() == '\'' && s.back() == '\'')))
    return s.substr(1, s.size() - 2);
  return s;
}

// Expands `--config <file>` into injected `--key=value` arguments.  The file
// is flat `key = value` text with `#` comments, keys mirroring the flags of
// the invoked subcommand; flags given explicitly on the command line win.
std::vector<std::string> expand_config_args(std::vector<std::string> raw) {
  std::string cfg_path;
  std::vector<std::string> args;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] == "--config") {
      if (i + 1 >= raw.size()) throw UsageError("--config requires a file path");
      cfg_path = raw[++i];
    } else if (raw[i].rfind("--config=", 0) == 0) {
      cfg_path = raw[i].substr(9);
    } else {
      args.push_back(raw[i]);
    }
  }
  if (cfg_path.empty()) return args;

  auto given_explicitly = [&](const std::string& key) {
    std::string flag = "--" + key;
    for (const auto& a : args)
      if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
    return false;
  };
  std::size_t sub = args.size();  // first positional token = subcommand
  for (std::size_t i = 0; i < args.size(); ++i)
    if (!args[i].empty() && args[i][0] != '-') {
      sub = i;
      break;
    }

  std::vector<std::string> before, after;
  std::istringstream in(read_file(cfg_path));
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw UsageError("config line " + std::to_string(lineno) +
                       ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = unquote(trim(line.substr(eq + 1)));
    if (key.empty())
      throw UsageError("config line " + std::to_string(lineno) + ": empty key");
    if (given_explicitly(key)) continue;
    // app-level flags go before the subcommand token, the rest after it
    (key == "threads" ? before : after).push_back("--" + key + "=" + value);
  }
  std::vector<std::string> out;
  out.insert(out.end(), args.begin(), args.begin() + std::min(sub, args.size()));
  out.insert(out.end(), before.begin(), before.end());
  if (sub < args.size()) out.push_back(args[sub]);
  out.insert(out.end(), after.begin(), after.end());
  if (sub < args.size())
    out.insert(out.end(), args.begin() + sub + 1, args.end());
  return out;
}

void add_config_option(CLI::App* cmd, std::string& sink) {
  cmd->add_option("--config", sink,
                  "flat key = value file mirroring this subcommand's flags "
                  "(explicit flags override; # starts a comment)");
}

OffsetMode parse_offset_mode(const std::string& s) {
  if (s == "centered") return OffsetMode::Centered;
  if (s == "worst_case_shift") return OffsetMode::WorstCaseShift;
  throw UsageError("bad offset mode '" + s +
                   "' (expected centered or worst_case_shift)");
}

struct GridFlags {
  double t_min = 1.0, t_max = 2000.0;
  int t_points = 40;
  double gamma_min = 1e-5, gamma_max = 1e-1;
  int gamma_points = 25;
  bool include_gamma_zero = true;
  std::vector<double> gammas_explicit;

  void add_time_flags(CLI::App* cmd) {
    cmd->add_option("--t-min", t_min, "smallest annealing time, ns")
        ->capture_default_str();
    cmd->add_option("--t-max", t_max, "largest annealing time, ns")
        ->capture_default_str();
    cmd->add_option("--t-points", t_points, "log-spaced annealing-time count")
        ->capture_default_str();
  }
  void add_gamma_flags(CLI::App* cmd) {
    cmd->add_option("--gammas", gammas_explicit,
                    "explicit dephasing rates in GHz (overrides the log grid)")
        ->delimiter(',');
    cmd->add_option("--gamma-min", gamma_min, "smallest nonzero rate, GHz")
        ->capture_default_str();
    cmd->add_option("--gamma-max", gamma_max, "largest rate, GHz")
        ->capture_default_str();
    cmd->add_option("--gamma-points", gamma_points, "log-spaced rate count")
        ->capture_default_str();
    cmd->add_flag("--no-gamma-zero", [this](std::int64_t) { include_gamma_zero = false; },
                  "omit the gamma = 0 grid point");
  }
  std::vector<double> times() const {
    if (t_points < 1 || t_min <= 0 || t_max < t_min)
      throw UsageError("bad annealing-time grid");
    return SweepGrid::log_spaced(t_min, t_max, t_points);
  }
  std::vector<double> gammas() const {
    if (!gammas_explicit.empty()) return gammas_explicit;
    if (gamma_points < 1 || gamma_min <= 0 || gamma_max < gamma_min)
      throw UsageError("bad gamma grid");
    std::vector<double> g;
    if (include_gamma_zero) g.push_back(0.0);
    for (double x : SweepGrid::log_spaced(gamma_min, gamma_max, gamma_points))
      g.push_back(x);
    return g;
  }
};

std::string spectrum_csv(const Spectrum& s) {
  std::string out = "index,energy_ghz\n";
  for (Eigen::Index i = 0; i < s.eigenvalues.size(); ++i)
    out += std::to_string(i) + "," + fmt17(s.eigenvalues(i)) + "\n";
  return out;
}

constexpr const char* kCertifyHeader =
    "measured_energy_ghz,measured_variance_ghz2,threshold_ghz,variance_is_bound,"
    "error_bar_ghz,improves_preestimate";

std::string certify_csv(const CertificationReport& r) {
  std::string out = std::string(kCertifyHeader) + "\n";
  out += fmt17(r.measured_energy) + "," + fmt17(r.measured_variance) + "," +
         fmt17(r.threshold) + "," + csv::bool_str(r.variance_is_bound) + "," +
         fmt17(r.error_bar) + "," + csv::bool_str(r.improves_preestimate) + "\n";
  return out;
}

int run(int argc, char** argv) {
  CLI::App app{"Quantum-annealing ground-state energy estimation with "
               "variance-certified error bars"};
  app.require_subcommand(1);
  std::string config_sink;
  int threads = 0;
  app.add_option("--threads", threads,
                 "worker threads (default: ANNEAL_CERTIFY_THREADS or all cores)");

  // spectrum ----------------------------------------------------------------
  auto* sc_spectrum = app.add_subcommand("spectrum", "eigenvalues of a Hamiltonian file as CSV");
  std::string spectrum_ham, spectrum_out;
  sc_spectrum->add_option("--ham", spectrum_ham, "Hamiltonian file")->required();
  sc_spectrum->add_option("--output", spectrum_out, "output path (default stdout)");
  add_config_option(sc_spectrum, config_sink);

  // anneal ------------------------------------------------------------------
  auto* sc_anneal = app.add_subcommand(
      "anneal", "single annealing run; prints T, gamma, <H>, variance, eps^2");
  struct {
    std::string ham, out, axis = "Z";
    double T = 0.0, gamma = 0.0;
    int steps = 0;
  } an;
  sc_anneal->add_option("--ham", an.ham, "Hamiltonian file")->required();
  sc_anneal->add_option("--T", an.T, "annealing time, ns")->required();
  sc_anneal->add_option("--gamma", an.gamma, "dephasing rate, GHz")->capture_default_str();
  sc_anneal->add_option("--steps", an.steps, "RK4 steps (0 = automatic)")
      ->capture_default_str();
  sc_anneal->add_option("--axis", an.axis, "Lindblad operator axis")->capture_default_str();
  sc_anneal->add_option("--output", an.out, "output path (default stdout)");
  add_config_option(sc_anneal, config_sink);

  // certify -----------------------------------------------------------------
  auto* sc_certify = app.add_subcommand(
      "certify", "run the anneal and decide whether the variance is a certified error bar");
  struct {
    std::string ham, out, axis = "Z", offset_mode = "centered";
    double T = 0.0, gamma = 0.0, m0 = 0.0, m1 = 0.0;
    double e0 = 0.0, e1 = 0.0;
    bool has_e0 = false, has_e1 = false;
    int steps = 0;
    long shots = 0;
    std::uint64_t seed = 0;
  } ce;
  sc_certify->add_option("--ham", ce.ham, "Hamiltonian file")->required();
  sc_certify->add_option("--T", ce.T, "annealing time, ns")->required();
  sc_certify->add_option("--gamma", ce.gamma, "dephasing rate, GHz")->capture_default_str();
  sc_certify->add_option("--m0", ce.m0, "pre-estimation bound dM0, GHz")->required();
  sc_certify->add_option("--m1", ce.m1, "pre-estimation bound dM1, GHz")->required();
  auto* opt_e0 = sc_certify->add_option("--e0", ce.e0, "pre-estimated E0, GHz");
  auto* opt_e1 = sc_certify->add_option("--e1", ce.e1, "pre-estimated E1, GHz");
  sc_certify->add_option("--shots", ce.shots,
                         "shots per Pauli term (0 = exact expectation)")
      ->capture_default_str();
  sc_certify->add_option("--seed", ce.seed, "sampling seed")->capture_default_str();
  sc_certify->add_option("--steps", ce.steps, "RK4 steps (0 = automatic)")
      ->capture_default_str();
  sc_certify->add_option("--axis", ce.axis, "Lindblad operator axis")->capture_default_str();
  sc_certify
      ->add_option("--offset-mode", ce.offset_mode,
                   "synthesized pre-estimate placement: centered | worst_case_shift")
      ->capture_default_str();
  sc_certify->add_option("--output", ce.out, "output path (default stdout)");
  add_config_option(sc_certify, config_sink);

  // sweep-time --------------------------------------------------------------
  auto* sc_sweep = app.add_subcommand("sweep-time",
                                      "energy/variance over a (gamma, T) grid as CSV");
  struct {
    std::string ham, out;
    int steps = 0;
  } sw;
  GridFlags sw_grid;
  sc_sweep->add_option("--ham", sw.ham, "Hamiltonian file")->required();
  sw_grid.add_time_flags(sc_sweep);
  sw_grid.add_gamma_flags(sc_sweep);
  sc_sweep->add_option("--steps", sw.steps, "RK4 steps (0 = automatic)")
      ->capture_default_str();
  sc_sweep->add_option("--output", sw.out, "output path (default stdout)");
  add_config_option(sc_sweep, config_sink);

  // threshold-map -----------------------------------------------------------
  auto* sc_map = app.add_subcommand(
      "threshold-map", "threshold decoherence rate vs pre-estimation halfwidth as CSV");
  struct {
    std::string ham, out, mode = "applicability", offset_mode = "centered";
    int steps = 0, hw_points = 30;
    double hw_max_factor = 1.2;
  } tm;
  GridFlags tm_grid;
  sc_map->add_option("--ham", tm.ham, "Hamiltonian file")->required();
  sc_map->add_option("--mode", tm.mode, "applicability | improvement")
      ->capture_default_str();
  sc_map->add_option("--offset-mode", tm.offset_mode,
                     "centered | worst_case_shift")
      ->capture_default_str();
  tm_grid.add_time_flags(sc_map);
  tm_grid.add_gamma_flags(sc_map);
  sc_map->add_option("--hw-points", tm.hw_points, "halfwidth grid size")
      ->capture_default_str();
  sc_map->add_option("--hw-max-factor", tm.hw_max_factor,
                     "largest halfwidth as a multiple of (E1-E0)/2")
      ->capture_default_str();
  sc_map->add_option("--steps", tm.steps, "RK4 steps (0 = automatic)")
      ->capture_default_str();
  sc_map->add_option("--output", tm.out, "output path (default stdout)");
  add_config_option(sc_map, config_sink);

  // errorbar-table ----------------------------------------------------------
  auto* sc_table = app.add_subcommand(
      "errorbar-table", "per-gamma optimal-T energy with certified error bars as CSV");
  struct {
    std::string ham, out, offset_mode = "centered";
    double m0 = 1e-3, m1 = 1e-3, e0 = 0.0, e1 = 0.0;
    int steps = 0;
  } eb;
  GridFlags eb_grid;
  sc_table->add_option("--ham", eb.ham, "Hamiltonian file")->required();
  sc_table->add_option("--m0", eb.m0, "pre-estimation bound dM0, GHz")
      ->capture_default_str();
  sc_table->add_option("--m1", eb.m1, "pre-estimation bound dM1, GHz")
      ->capture_default_str();
  auto* eb_e0 = sc_table->add_option("--e0", eb.e0, "pre-estimated E0, GHz");
  auto* eb_e1 = sc_table->add_option("--e1", eb.e1, "pre-estimated E1, GHz");
  sc_table->add_option("--offset-mode", eb.offset_mode, "centered | worst_case_shift")
      ->capture_default_str();
  eb_grid.add_time_flags(sc_table);
  eb_grid.add_gamma_flags(sc_table);
  sc_table->add_option("--steps", eb.steps, "RK4 steps (0 = automatic)")
      ->capture_default_str();
  sc_table->add_option("--output", eb.out, "output path (default stdout)");
  add_config_option(sc_table, config_sink);

  // verify-theorem1 ---------------------------------------------------------
  auto* sc_thm = app.add_subcommand(
      "verify-theorem1", "brute-force check that variance bounds the squared error");
  long thm_trials = 100000;
  std::uint64_t thm_seed = 42;
  sc_thm->add_option("--trials", thm_trials, "random instances")->capture_default_str();
  sc_thm->add_option("--seed", thm_seed, "RNG seed")->capture_default_str();
  add_config_option(sc_thm, config_sink);

  try {
    std::vector<std::string> args =
        expand_config_args(std::vector<std::string>(argv + 1, argv + argc));
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: 1: " << e.what() << "\n";
    std::cerr << app.help() << "\n";
    return 1;
  }

  if (*sc_spectrum) {
    Spectrum s = diagonalize(load_hamiltonian(spectrum_ham).to_matrix());
    write_output(spectrum_out, spectrum_csv(s));
    return 0;
  }

  if (*sc_anneal) {
    PauliHamiltonian hp = load_hamiltonian(an.ham);
    PauliHamiltonian hd = default_driver(hp.num_qubits());
    AnnealConfig cfg{an.T, an.gamma, an.steps, parse_axis(an.axis)};
    EnergyMeter meter(hp);
    Spectrum spectrum = diagonalize(hp.to_matrix());
    EnergyMoments m;
    double eps2 = 0.0;
    if (an.gamma == 0.0) {
      Eigen::VectorXcd psi = evolve_closed(hp, hd, cfg);
      m = meter.moments(psi);
      eps2 = decompose(psi, spectrum).epsilon_squared;
    } else {
      Eigen::MatrixXcd rho = evolve_open(hp, hd, cfg);
      m = meter.moments(rho);
      eps2 = decompose(rho, spectrum).epsilon_squared;
    }
    std::string out = "T_ns,gamma_ghz,mean_ghz,variance_ghz2,epsilon_squared\n";
    out += fmt17(an.T) + "," + fmt17(an.gamma) + "," + fmt17(m.mean) + "," +
           fmt17(m.variance) + "," + fmt17(eps2) + "\n";
    write_output(an.out, out);
    return 0;
  }

  if (*sc_certify) {
    ce.has_e0 = opt_e0->count() > 0;
    ce.has_e1 = opt_e1->count() > 0;
    if (ce.has_e0 != ce.has_e1)
      throw UsageError("--e0 and --e1 must be given together");
    PauliHamiltonian hp = load_hamiltonian(ce.ham);
    PauliHamiltonian hd = default_driver(hp.num_qubits());
    AnnealConfig cfg{ce.T, ce.gamma, ce.steps, parse_axis(ce.axis)};
    EnergyMeter meter(hp);
    Spectrum spectrum = diagonalize(hp.to_matrix());
    PreEstimate pre;
    if (ce.has_e0) {
      pre = PreEstimate{ce.e0, ce.e1, ce.m0, ce.m1};
    } else {
      pre = synthesize_preestimate(spectrum, ce.m0, ce.m1,
                                   parse_offset_mode(ce.offset_mode));
    }
    EnergyMoments m;
    if (ce.gamma == 0.0) {
      Eigen::VectorXcd psi = evolve_closed(hp, hd, cfg);
      m = ce.shots > 0 ? meter.sample_moments(psi, ce.shots, ce.seed)
                       : meter.moments(psi);
    } else {
      Eigen::MatrixXcd rho = evolve_open(hp, hd, cfg);
      m = ce.shots > 0 ? meter.sample_moments(rho, ce.shots, ce.seed)
                       : meter.moments(rho);
    }
    CertificationReport rep = certify(m, pre);
    std::string out = certify_csv(rep);
    if (rep.variance_is_bound) {
      out += "verdict: certified; |<H> - E0| <= " + fmt17(rep.error_bar) + " GHz";
      out += rep.improves_preestimate
                 ? " (improves on the pre-estimation bound " + fmt17(pre.m0) + " GHz)\n"
                 : " (does not improve on the pre-estimation bound " + fmt17(pre.m0) +
                       " GHz)\n";
    } else {
      out += "verdict: not certified; measured energy " + fmt17(rep.measured_energy) +
             " GHz is not below the threshold " + fmt17(rep.threshold) + " GHz\n";
    }
    write_output(ce.out, out);
    return rep.variance_is_bound ? 0 : 3;
  }

  if (*sc_sweep) {
    PauliHamiltonian hp = load_hamiltonian(sw.ham);
    PauliHamiltonian hd = default_driver(hp.num_qubits());
    auto cells = time_sweep(hp, hd, sw_grid.gammas(), sw_grid.times(), sw.steps, threads);
    write_output(sw.out, emit_time_sweep(cells));
    return 0;
  }

  if (*sc_map) {
    PauliHamiltonian hp = load_hamiltonian(tm.ham);
    PauliHamiltonian hd = default_driver(hp.num_qubits());
    MapPredicate pred;
    if (tm.mode == "applicability")
      pred = MapPredicate::Applicability;
    else if (tm.mode == "improvement")
      pred = MapPredicate::Improvement;
    else
      throw UsageError("bad mode '" + tm.mode + "'");
    OptimalRunEvaluator eval(hp, hd, tm_grid.times(), tm.steps, threads);
    auto [e0, e1] = first_gap(eval.spectrum());
    if (tm.hw_points < 1 || tm.hw_max_factor <= 0)
      throw UsageError("bad halfwidth grid");
    auto halfwidths =
        SweepGrid::linear_upper(tm.hw_max_factor * 0.5 * (e1 - e0), tm.hw_points);
    auto pts = threshold_map(eval, tm_grid.gammas(), halfwidths,
                             parse_offset_mode(tm.offset_mode), pred);
    write_output(tm.out, emit_threshold_map(pts));
    return 0;
  }

  if (*sc_table) {
    if ((eb_e0->count() > 0) != (eb_e1->count() > 0))
      throw UsageError("--e0 and --e1 must be given together");
    PauliHamiltonian hp = load_hamiltonian(eb.ham);
    PauliHamiltonian hd = default_driver(hp.num_qubits());
    OptimalRunEvaluator eval(hp, hd, eb_grid.times(), eb.steps, threads);
    PreEstimate pre;
    if (eb_e0->count() > 0)
      pre = PreEstimate{eb.e0, eb.e1, eb.m0, eb.m1};
    else
      pre = synthesize_preestimate(eval.spectrum(), eb.m0, eb.m1,
                                   parse_offset_mode(eb.offset_mode));
    auto rows = errorbar_table(eval, eb_grid.gammas(), pre);
    write_output(eb.out, emit_errorbar_table(rows));
    return 0;
  }

  if (*sc_thm) {
    TheoremCheckReport r = verify_theorem1(thm_trials, thm_seed);
    std::cout << "trials," << r.trials << "\n";
    std::cout << "min_margin," << fmt17(r.min_margin) << "\n";
    std::cout << "equality_margin," << fmt17(r.equality_margin) << "\n";
    std::cout << "counterexample_variance," << fmt17(r.counterexample_variance) << "\n";
    std::cout << "counterexample_error_sq," << fmt17(r.counterexample_error_sq) << "\n";
    return 0;
  }

  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const UsageError& e) {
    std::cerr << "error: 1: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: 1: " << e.what() << "\n";
    return 1;
  } catch (const anncert::ParseError& e) {
    std::cerr << "error: 2: " << e.what() << "\n";
    return 2;
  } catch (const anncert::ComputationError& e) {
    std::cerr << "error: 2: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: 2: " << e.what() << "\n";
    return 2;
  }
}
