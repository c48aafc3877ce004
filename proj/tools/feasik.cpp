// feasik: command-line front end for the overrelaxed projection solver.
//
// Exit codes: 0 success / feasible, 1 configuration error, 2 MaxIterExceeded or failed check,
// 3 numerical breakdown (non-finite iterate, underflowed schedule, inconsistent constraint).

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "feasik/certificates.hpp"
#include "feasik/config.hpp"
#include "feasik/engine.hpp"
#include "feasik/error.hpp"
#include "feasik/reports.hpp"
#include "feasik/sweep.hpp"

namespace {

using namespace feasik;

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kNotConverged = 2;
constexpr int kNumerical = 3;

struct Common {
  std::string config;
  std::string output;
  std::optional<std::uint64_t> seed;
  bool verbose = false;
};

std::optional<std::uint64_t> effective_seed(const Common& c) {
  if (c.seed) return c.seed;
  return seed_from_environment();
}

/// Opens -o or falls back to `fallback`.
class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) : os_(&fallback) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary);
      if (!file_) throw ConfigError(path + ": cannot open for writing");
      os_ = &file_;
    }
  }
  std::ostream& stream() { return *os_; }

 private:
  std::ofstream file_;
  std::ostream* os_;
};

template <class Real>
int solve_with(const Json& doc, const Common& c, bool subgradient_path) {
  const LoadedConfig<Real> cfg = parse_config<Real>(doc, effective_seed(c));
  const RunResult<Real> run = solve(cfg.run, {.subgradient_path = subgradient_path, .record_trace = true});
  for (const auto& w : run.warnings) std::cerr << "warning: " << w << '\n';
  Output out(c.output, std::cout);
  write_trace_csv(out.stream(), run.trace, cfg.problem->dim());
  std::ostream& summary = c.output.empty() ? std::cerr : std::cout;
  summary << "status=" << (run.status == RunStatus::FeasibleAt ? "FeasibleAt" : "MaxIterExceeded")
          << " k_feasible=" << (run.k_feasible() ? std::to_string(*run.k_feasible()) : "none")
          << " corrections=" << run.corrections << '\n';
  if (c.verbose) {
    summary << "final=";
    for (std::size_t d = 0; d < run.final.size(); ++d) {
      summary << (d ? "," : "") << format_real(run.final[d]);
    }
    summary << '\n';
  }
  return run.status == RunStatus::FeasibleAt ? kOk : kNotConverged;
}

int cmd_solve(const Common& c, bool subgradient_path) {
  const Json doc = read_json_file(c.config);
  if (precision_of(doc) == Precision::Extended) return solve_with<long double>(doc, c, subgradient_path);
  return solve_with<double>(doc, c, subgradient_path);
}

int cmd_certify(const Common& c) {
  const Json doc = read_json_file(c.config);
  if (precision_of(doc) != Precision::Binary64) {
    throw ConfigError("$.run.precision: certify supports binary64 runs only");
  }
  const LoadedConfig<double> cfg = parse_config<double>(doc, effective_seed(c));
  const auto& interior = cfg.problem->interior();
  if (!interior) throw ConfigError("$.interior: certify needs an interior {z, R}");
  const InteriorCheck spot = check_interior(*cfg.problem, std::span<const Index>(cfg.run.window()),
                                            1000, cfg.seed);
  if (!spot.ok()) {
    std::cerr << "interior spot check failed: " << spot.failures << " of " << spot.samples
              << " samples of the sphere |x - z| = 2R lie outside C"
              << (spot.z_in_q ? "" : " (and z is not in Q)") << '\n';
    return kNotConverged;
  }
  const RunResult<double> run = solve(cfg.run);
  const auto cert = check_descent(*cfg.problem, run.trace, interior->z, interior->R,
                                  cfg.run.lambda_floor());
  const auto fixed_bad = check_fixed_points(*cfg.problem, run.trace);
  Output out(c.output, std::cout);
  out.stream() << to_json(cert, fixed_bad).dump(c.verbose ? 2 : -1) << '\n';
  std::ostream& summary = c.output.empty() ? std::cerr : std::cout;
  print_summary(summary, cert);
  summary << "fixed_point_failures=" << fixed_bad.size() << '\n';
  return cert.ok() && fixed_bad.empty() ? kOk : kNotConverged;
}

int cmd_reproduce(const Common& c, const std::string& which) {
  Json report;
  bool pass = false;
  if (which == "a1" || which == "a1-bracketed") {
    const CounterMode mode = which == "a1" ? CounterMode::Raw : CounterMode::Bracketed;
    A1Report r = reproduce_a1<long double>(mode);
    if (mode == CounterMode::Raw) r.binary64_note = binary64_a1_note(10'000);
    pass = r.pass;
    report = to_json(r);
    if (mode == CounterMode::Raw) {
      print_table(std::cout, r);
      std::cout << "max relative error (y_2k, k<=100): " << format_real(r.max_rel_error_y2k)
                << "\nmax relative error (whole trace): " << format_real(r.max_rel_error_trace)
                << "\nbinary64: " << *r.binary64_note << '\n';
    }
    std::cout << "status=" << (r.status == RunStatus::FeasibleAt ? "FeasibleAt" : "MaxIterExceeded")
              << " k=" << r.k_final << " corrections=" << r.corrections << '\n';
  } else if (which == "a2" || which == "a2-bracketed") {
    const CounterMode mode = which == "a2" ? CounterMode::Raw : CounterMode::Bracketed;
    const A2Report r = reproduce_a2(mode);
    pass = r.pass;
    report = to_json(r);
    if (mode == CounterMode::Raw) {
      print_table(std::cout, r);
      std::cout << "max relative error (k<=30): " << format_real(r.max_rel_error)
                << "\nb_1 == 1/128: " << (r.b1_exact ? "yes" : "no") << '\n';
    }
    std::cout << "status=" << (r.status == RunStatus::FeasibleAt ? "FeasibleAt" : "MaxIterExceeded")
              << " k=" << r.k_final << " corrections=" << r.corrections << '\n';
  } else {
    throw ConfigError("reproduce: expected a1, a2, a1-bracketed or a2-bracketed");
  }
  if (!c.output.empty()) {
    Output out(c.output, std::cout);
    out.stream() << report.dump(2) << '\n';
  }
  std::cout << (pass ? "PASS" : "FAIL") << ' ' << which << '\n';
  return pass ? kOk : kNotConverged;
}

int cmd_sweep(const Common& c, int jobs, bool timing, bool certify) {
  const SweepGrid grid = parse_sweep(read_json_file(c.config), effective_seed(c));
  SweepSpec spec;
  spec.instances = grid.instances;
  spec.seed = grid.seed;
  spec.controls = grid.controls;
  spec.phis = grid.phis;
  for (const Json& o : grid.overrelaxations) {
    spec.schedules.push_back(parse_overrelaxation<double>(o));
    spec.schedule_names.push_back(o.value("kind", std::string("?")));
  }
  spec.alpha = grid.alpha;
  spec.counter_mode = grid.counter_mode;
  spec.max_iter = grid.max_iter;
  spec.certify = certify;
  for (const auto& name : spec.controls) (void)named_control(name, 1, 0);

  const std::vector<SweepRow> rows = run_sweep(spec, jobs);
  Output out(c.output, std::cout);
  write_sweep_csv(out.stream(), rows, timing);
  std::size_t finite = 0, errors = 0, violations = 0;
  for (const auto& r : rows) {
    if (!r.error.empty()) {
      ++errors;
      std::cerr << "instance " << r.c.instance << " " << r.c.control << ": " << r.error << '\n';
    }
    if (r.k_feasible) ++finite;
    violations += r.descent_violations + r.fixed_point_failures;
  }
  std::ostream& summary = c.output.empty() ? std::cerr : std::cout;
  summary << "runs=" << rows.size() << " feasible=" << finite << " errors=" << errors;
  if (certify) summary << " certificate_violations=" << violations;
  summary << '\n';
  return finite == rows.size() && violations == 0 ? kOk : kNotConverged;
}

int cmd_validate(const Common& c, bool emit) {
  const Json doc = read_json_file(c.config);
  Json canonical;
  std::size_t m = 0;
  if (precision_of(doc) == Precision::Extended) {
    const auto cfg = parse_config<long double>(doc, effective_seed(c));
    canonical = emit_config(cfg);
    m = *cfg.problem->cardinality();
  } else {
    const auto cfg = parse_config<double>(doc, effective_seed(c));
    canonical = emit_config(cfg);
    m = *cfg.problem->cardinality();
    if (cfg.problem->interior()) {
      const auto spot = check_interior(*cfg.problem, std::span<const Index>(cfg.run.window()), 1000, cfg.seed);
      if (!spot.ok()) {
        std::cerr << "interior spot check failed (" << spot.failures << " of " << spot.samples << ")\n";
        return kConfigError;
      }
    }
  }
  if (emit) {
    Output out(c.output, std::cout);
    out.stream() << canonical.dump(2) << '\n';
  }
  std::cerr << "valid: dim=" << canonical["dim"] << " m=" << m << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"feasik: finitely convergent overrelaxed projection methods"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--seed", common.seed, "Override every seed in the config (else FEASIK_SEED)");
  app.add_flag("-v,--verbose", common.verbose, "Extra output");

  auto* solve = app.add_subcommand("solve", "Run the iteration and write the trace CSV");
  solve->add_option("config", common.config, "Problem and run document")->required();
  solve->add_option("-o,--output", common.output, "Trace CSV path (default: stdout)");
  bool subgradient_path = false;
  solve->add_flag("--subgradient-path", subgradient_path,
                  "Use the explicit f/g update (sublevel constraints, phi = subgrad_norm)");

  auto* certify = app.add_subcommand("certify", "Check descent and fixed-point inequalities on a run");
  certify->add_option("config", common.config, "Problem and run document with interior")->required();
  certify->add_option("-o,--output", common.output, "Report JSON path (default: stdout)");

  auto* reproduce = app.add_subcommand("reproduce", "Reproduce a counterexample");
  std::string which;
  reproduce->add_option("which", which, "a1, a2, a1-bracketed or a2-bracketed")
      ->required()
      ->check(CLI::IsMember({"a1", "a2", "a1-bracketed", "a2-bracketed"}));
  reproduce->add_option("-o,--output", common.output, "Report JSON path");

  auto* sweep = app.add_subcommand("sweep", "Run a grid of random instances");
  sweep->add_option("grid", common.config, "Grid document")->required();
  sweep->add_option("-o,--output", common.output, "Results CSV path (default: stdout)");
  int jobs = 0;
  bool no_timing = false;
  bool sweep_certify = false;
  sweep->add_option("-j,--jobs", jobs, "Parallel runs (default: all cores)")->check(CLI::NonNegativeNumber);
  sweep->add_flag("--no-timing", no_timing, "Omit the wall time column (byte-stable output)");
  sweep->add_flag("--certify", sweep_certify, "Also run the descent and fixed-point checks");

  auto* validate = app.add_subcommand("validate", "Parse and validate a config");
  validate->add_option("config", common.config, "Problem and run document")->required();
  validate->add_option("-o,--output", common.output, "Canonical document path (with --emit)");
  bool emit = false;
  validate->add_flag("--emit", emit, "Print the canonical document");

  for (auto* sub : {solve, certify, reproduce, sweep, validate}) {
    sub->add_option("--seed", common.seed, "Override every seed in the config (else FEASIK_SEED)");
    sub->add_flag("-v,--verbose", common.verbose, "Extra output");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*solve) return cmd_solve(common, subgradient_path);
    if (*certify) return cmd_certify(common);
    if (*reproduce) return cmd_reproduce(common, which);
    if (*sweep) return cmd_sweep(common, jobs, !no_timing, sweep_certify);
    if (*validate) return cmd_validate(common, emit);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const IndexError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const PreconditionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumerical;
  }
  return kConfigError;
}
