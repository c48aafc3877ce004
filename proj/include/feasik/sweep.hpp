#pragma once

// Grids of independent runs over random instances, executed in parallel across runs.

#include <chrono>
#include <cstdint>
#include <exception>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <omp.h>

#include "feasik/certificates.hpp"
#include "feasik/controls.hpp"
#include "feasik/engine.hpp"
#include "feasik/instances.hpp"

namespace feasik {

/// Control by name for an instance with m constraints.
inline Control<double> named_control(const std::string& name, std::size_t m, std::uint64_t seed) {
  if (name == "cyclic") return cyclic_control<double>(m);
  if (name == "repetitive") return shuffled_rounds<double>(m, seed);
  if (name == "expanding") return expanding_control<double>(m);
  if (name == "remotest") return Control<double>::RemotestSet{};
  if (name == "max_displacement") return Control<double>::MaxDisplacement{};
  if (name == "max_violation") return Control<double>::MaxViolation{};
  if (name == "random") return uniform_singletons<double>(m, seed);
  throw ConfigError("unknown control \"" + name + "\"");
}

struct SweepCase {
  std::uint64_t instance;
  std::string control;
  PhiKind phi;
  std::size_t schedule;  // index into the grid's schedule list
};

struct SweepRow {
  SweepCase c;
  std::size_t dim = 0;
  std::size_t m = 0;
  std::string schedule;
  std::optional<std::uint64_t> k_feasible;
  std::uint64_t corrections = 0;
  bool terminal_feasible = false;  // exact sign test on the returned iterate
  std::size_t descent_applicable = 0;
  std::size_t descent_violations = 0;
  std::size_t fixed_point_failures = 0;
  double wall_ms = 0;
  std::string error;
};

struct SweepSpec {
  std::uint64_t instances = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> controls;
  std::vector<PhiKind> phis;
  std::vector<Overrelaxation<double>> schedules;
  std::vector<std::string> schedule_names;
  double alpha = 1;
  CounterMode counter_mode = CounterMode::Bracketed;
  std::uint64_t max_iter = 100'000;
  bool certify = false;  // run the descent and fixed-point checks on every trace
};

inline std::vector<SweepCase> sweep_cases(const SweepSpec& s) {
  std::vector<SweepCase> out;
  for (std::uint64_t i = 0; i < s.instances; ++i) {
    for (const auto& c : s.controls) {
      for (PhiKind phi : s.phis) {
        for (std::size_t j = 0; j < s.schedules.size(); ++j) out.push_back({i, c, phi, j});
      }
    }
  }
  return out;
}

inline SweepRow run_case(const SweepSpec& s, const SweepCase& c) {
  SweepRow row;
  row.c = c;
  row.schedule = s.schedule_names.at(c.schedule);
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const Instance inst = random_instance(s.seed, c.instance);
    row.dim = inst.problem->dim();
    row.m = *inst.problem->cardinality();
    const std::uint64_t control_seed = mix64(s.seed ^ mix64(c.instance + 1));
    RunConfig<double> cfg(inst.problem, named_control(c.control, row.m, control_seed), inst.x0);
    cfg.relaxation = Relaxation<double>::constant(s.alpha);
    cfg.overrelaxation = s.schedules[c.schedule];
    cfg.phi = c.phi;
    cfg.counter_mode = s.counter_mode;
    cfg.max_iter = s.max_iter;
    const RunResult<double> run = solve(cfg, {.subgradient_path = false, .record_trace = s.certify});
    row.k_feasible = run.k_feasible();
    row.corrections = run.corrections;
    row.terminal_feasible = feasible(*inst.problem, run.final);
    if (s.certify) {
      const auto cert = check_descent(*inst.problem, run.trace, inst.z, inst.R, cfg.lambda_floor());
      row.descent_applicable = cert.applicable;
      row.descent_violations = cert.violations;
      row.fixed_point_failures = check_fixed_points(*inst.problem, run.trace).size();
    }
  } catch (const std::exception& e) {
    row.error = e.what();
  }
  row.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return row;
}

/// Runs every case; rows come back in case order regardless of `jobs`.
inline std::vector<SweepRow> run_sweep(const SweepSpec& s, int jobs = 0) {
  const std::vector<SweepCase> cases = sweep_cases(s);
  std::vector<SweepRow> rows(cases.size());
  const auto n = static_cast<std::ptrdiff_t>(cases.size());
  const int threads = jobs > 0 ? jobs : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (std::ptrdiff_t j = 0; j < n; ++j) rows[j] = run_case(s, cases[j]);
  return rows;
}

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows, bool timing) {
  os << "instance,dim,m,control,phi,schedule,k_feasible,corrections";
  if (timing) os << ",wall_ms";
  os << '\n';
  for (const auto& r : rows) {
    os << r.c.instance << ',' << r.dim << ',' << r.m << ',' << r.c.control << ','
       << (r.c.phi == PhiKind::One ? "one" : "subgrad_norm") << ',' << r.schedule << ',';
    if (!r.error.empty()) {
      os << "ERROR";
    } else if (r.k_feasible) {
      os << *r.k_feasible;
    } else {
      os << "MAX";
    }
    os << ',' << r.corrections;
    if (timing) os << ',' << format_real(r.wall_ms);
    os << '\n';
  }
}

}  // namespace feasik
