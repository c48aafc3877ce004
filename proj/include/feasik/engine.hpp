#pragma once

// The overrelaxed projection iteration
//
//   x_{k+1} = P_Q( x_k + alpha_[k] * sum_{i ∈ I_k(x_k)} lambda_{i,k} beta_{i,k} (T_i(x_k) - x_k) ),
//   beta_{i,k} = (r_[k]/phi_i(x_k) + ||T_i(x_k) - x_k||) / ||T_i(x_k) - x_k||   (0 if T_i(x_k) = x_k),
//
// where [k] counts the earlier steps that moved the iterate (or is k itself in raw mode).

#include <charconv>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "feasik/controls.hpp"
#include "feasik/error.hpp"
#include "feasik/kernels.hpp"
#include "feasik/operators.hpp"
#include "feasik/problem.hpp"
#include "feasik/schedules.hpp"

namespace feasik {

template <std::floating_point Real>
struct RunConfig {
  RunConfig(std::shared_ptr<const BasicProblem<Real>> problem_, Control<Real> control_,
            BasicVector<Real> x0_)
      : problem(std::move(problem_)), control(std::move(control_)), x0(std::move(x0_)) {
    validate();
  }

  std::shared_ptr<const BasicProblem<Real>> problem;
  Control<Real> control;
  BasicVector<Real> x0;
  Relaxation<Real> relaxation = Relaxation<Real>::constant(1);
  Overrelaxation<Real> overrelaxation = Overrelaxation<Real>::harmonic();
  Phi<Real> phi = PhiKind::One;
  WeightRule<Real> weights = WeightKind::UniformOverActive;
  CounterMode counter_mode = CounterMode::Bracketed;
  std::uint64_t max_iter = 1'000'000;
  IndexSet feas_window;  // empty: all of I (finite pools only)
  Real feas_tol = 0;
  std::size_t parallel_threshold = 64;  // evaluate #I_k >= threshold indices in parallel

  void validate() const {
    if (!problem) throw ConfigError("run config needs a problem");
    if (x0.size() != problem->dim()) throw ConfigError("x0 dimension does not match problem dim");
    if (!problem->outer().contains(x0)) throw ConfigError("x0 must lie in Q");
    if (max_iter == 0) throw ConfigError("max_iter must be positive");
    if (!(feas_tol >= 0)) throw ConfigError("feas_tol must be nonnegative");
    control.validate(*problem);
    if (feas_window.empty() && !problem->is_finite()) {
      throw ConfigError("infinite pool needs an explicit feas_window");
    }
    for (Index i : feas_window) problem->check_index(i);
  }

  IndexSet window() const { return feas_window.empty() ? problem->all_indices() : feas_window; }

  /// lambda for the descent certificate, from the weight rule and M.
  Real lambda_floor() const { return weights.floor(control.max_card()); }
};

/// Per-index data of one step.
template <std::floating_point Real>
struct IndexEval {
  Index index;
  Real residual;
  Real displacement;
  Real phi;
  Real beta;
  Real weight;
  bool violated;
};

template <std::floating_point Real>
struct TraceRecord {
  std::uint64_t k;
  std::uint64_t bracket_k;
  BasicVector<Real> x;  // x_k
  IndexSet active;      // I_k(x_k)
  IndexSet violated;    // I_k^+(x_k)
  std::vector<IndexEval<Real>> evals;
  Real step_norm = 0;  // ||x_{k+1} - x_k||
  Real alpha = 0;
  Real r = 0;
  bool feasible = false;
  bool corrected = false;
  bool stepped = false;  // false for the terminal record, which carries no step
};

template <std::floating_point Real>
struct UpdateResult {
  BasicVector<Real> x_next;
  bool corrected;
  IndexSet violated;
  std::vector<IndexEval<Real>> evals;
  Real step_norm;
};

/// One application of P_Q V for a given active set, relaxation and overrelaxation.
template <std::floating_point Real>
UpdateResult<Real> apply_update(const BasicProblem<Real>& p, const BasicVector<Real>& x,
                                const IndexSet& active, Real alpha, Real r, const Phi<Real>& phi,
                                const WeightRule<Real>& weights,
                                std::size_t parallel_threshold = 64) {
  const std::vector<ActiveEval<Real>> evals =
      active.size() >= parallel_threshold ? evaluate_active_parallel(p, x, std::span(active))
                                          : evaluate_active_serial(p, x, std::span(active));
  std::vector<bool> violated_flags(active.size());
  for (std::size_t j = 0; j < active.size(); ++j) {
    violated_flags[j] = evals[j].eval.displacement_norm > 0;
  }
  const std::vector<Real> lambda = weights.weights(active, violated_flags);

  UpdateResult<Real> out{x, false, {}, {}, Real(0)};
  const std::size_t n = x.size();
  std::vector<CompensatedSum<Real>> step(n);
  for (std::size_t j = 0; j < active.size(); ++j) {
    const auto& [i, e] = evals[j];
    IndexEval<Real> rec{i, e.residual, e.displacement_norm, Real(0), Real(0), lambda[j],
                        violated_flags[j]};
    if (violated_flags[j]) {
      out.violated.push_back(i);
      rec.phi = p.visit(i, [&](const Constraint<Real>& c) { return phi.evaluate(i, c, e, x); });
      rec.beta = beta(r, rec.phi, e.displacement_norm);
      const Real coeff = alpha * lambda[j] * rec.beta;
      for (std::size_t d = 0; d < n; ++d) step[d].add(coeff * (e.image[d] - x[d]));
    }
    out.evals.push_back(rec);
  }
  if (out.violated.empty()) return out;

  BasicVector<Real> moved = x;
  bool nonzero = false;
  for (std::size_t d = 0; d < n; ++d) {
    const Real s = step[d].value();
    nonzero = nonzero || s != 0;
    moved[d] += s;
  }
  if (!nonzero) return out;
  out.corrected = true;
  out.x_next = p.outer().project(moved);
  if (!out.x_next.all_finite()) throw NumericalError("iterate left the finite range");
  out.step_norm = distance(out.x_next, x);
  return out;
}

template <std::floating_point Real>
struct StepOutcome {
  BasicVector<Real> x_next;
  bool corrected;
  TraceRecord<Real> record;
};

namespace detail {

template <std::floating_point Real>
std::uint64_t schedule_index(const RunConfig<Real>& cfg, std::uint64_t k,
                             const CorrectionCounter& counter) {
  return cfg.counter_mode == CounterMode::Bracketed ? counter.value() : k;
}

template <std::floating_point Real>
Real checked_overrelaxation(const RunConfig<Real>& cfg, std::uint64_t idx) {
  const Real r = cfg.overrelaxation.value(idx);
  if (!(r > 0) || !std::isfinite(r)) {
    throw NumericalError("overrelaxation r_" + std::to_string(idx) +
                         " is not a positive finite number (underflow?)");
  }
  return r;
}

}  // namespace detail

/// One iteration of the general method at x_k. The caller advances `counter`.
template <std::floating_point Real>
StepOutcome<Real> step(const RunConfig<Real>& cfg, const BasicVector<Real>& x, std::uint64_t k,
                       const CorrectionCounter& counter) {
  const BasicProblem<Real>& p = *cfg.problem;
  const IndexSet active = cfg.control.next(k, x, p);
  const std::uint64_t idx = detail::schedule_index(cfg, k, counter);
  const Real alpha = cfg.relaxation.value(idx);
  const Real r = detail::checked_overrelaxation(cfg, idx);
  UpdateResult<Real> u =
      apply_update(p, x, active, alpha, r, cfg.phi, cfg.weights, cfg.parallel_threshold);
  TraceRecord<Real> rec{k,         counter.value(),      x,     active, std::move(u.violated),
                        std::move(u.evals), u.step_norm, alpha, r,      false,
                        u.corrected, true};
  return {std::move(u.x_next), u.corrected, std::move(rec)};
}

/// P_Q V written directly in terms of f_i and g_i:
///   x_{k+1} = P_Q( x_k - alpha sum_{i ∈ I_k^+} lambda_{i,k} (r + f_i(x_k)) / ||g_i(x_k)||^2 g_i(x_k) ).
/// Algebraically equal to `apply_update` with phi = SubgradNorm on sublevel constraints.
template <std::floating_point Real>
UpdateResult<Real> apply_subgradient_update(const BasicProblem<Real>& p, const BasicVector<Real>& x,
                                            const IndexSet& active, Real alpha, Real r,
                                            const WeightRule<Real>& weights) {
  struct Local {
    Real f;
    BasicVector<Real> g;
  };
  std::vector<Local> locals;
  std::vector<bool> violated_flags(active.size());
  for (std::size_t j = 0; j < active.size(); ++j) {
    locals.push_back(p.visit(active[j], [&](const Constraint<Real>& c) -> Local {
      const auto* f = c.function();
      if (!f) throw ConfigError("subgradient step requires sublevel constraints");
      return {f->value(x), f->subgradient(x)};
    }));
    violated_flags[j] = locals.back().f > 0;
  }
  const std::vector<Real> lambda = weights.weights(active, violated_flags);

  UpdateResult<Real> out{x, false, {}, {}, Real(0)};
  std::vector<CompensatedSum<Real>> step(x.size());
  for (std::size_t j = 0; j < active.size(); ++j) {
    const auto& [fx, g] = locals[j];
    IndexEval<Real> e{active[j], fx, Real(0), Real(1), Real(0), lambda[j], violated_flags[j]};
    if (violated_flags[j]) {
      const Real gn2 = norm_squared(g);
      if (gn2 == 0) {
        throw InconsistentConstraint("inconsistent constraint: positive value with zero subgradient");
      }
      out.violated.push_back(active[j]);
      e.phi = std::sqrt(gn2);
      e.displacement = fx / e.phi;
      e.beta = beta(r, e.phi, e.displacement);
      const Real coeff = alpha * lambda[j] * (r + fx) / gn2;
      for (std::size_t d = 0; d < x.size(); ++d) step[d].add(-coeff * g[d]);
    }
    out.evals.push_back(e);
  }
  if (out.violated.empty()) return out;
  BasicVector<Real> moved = x;
  bool nonzero = false;
  for (std::size_t d = 0; d < x.size(); ++d) {
    const Real s = step[d].value();
    nonzero = nonzero || s != 0;
    moved[d] += s;
  }
  if (!nonzero) return out;
  out.corrected = true;
  out.x_next = p.outer().project(moved);
  if (!out.x_next.all_finite()) throw NumericalError("iterate left the finite range");
  out.step_norm = distance(out.x_next, x);
  return out;
}

/// `step` specialized to subgradient projections with phi_i = ||g_i||.
template <std::floating_point Real>
StepOutcome<Real> step_subgradient(const RunConfig<Real>& cfg, const BasicVector<Real>& x,
                                   std::uint64_t k, const CorrectionCounter& counter) {
  const BasicProblem<Real>& p = *cfg.problem;
  const IndexSet active = cfg.control.next(k, x, p);
  const std::uint64_t idx = detail::schedule_index(cfg, k, counter);
  const Real alpha = cfg.relaxation.value(idx);
  const Real r = detail::checked_overrelaxation(cfg, idx);
  UpdateResult<Real> u = apply_subgradient_update(p, x, active, alpha, r, cfg.weights);
  TraceRecord<Real> rec{k,         counter.value(),      x,     active, std::move(u.violated),
                        std::move(u.evals), u.step_norm, alpha, r,      false,
                        u.corrected, true};
  return {std::move(u.x_next), u.corrected, std::move(rec)};
}

enum class RunStatus { FeasibleAt, MaxIterExceeded };

template <std::floating_point Real>
struct RunResult {
  RunStatus status;
  std::uint64_t k_final;      // k of the feasible iterate, or max_iter
  std::uint64_t corrections;  // [k_final] in bracketed mode
  BasicVector<Real> final;
  std::vector<TraceRecord<Real>> trace;
  std::vector<std::string> warnings;
  std::optional<std::uint64_t> k_feasible() const {
    return status == RunStatus::FeasibleAt ? std::optional(k_final) : std::nullopt;
  }
};

struct SolveOptions {
  bool subgradient_path = false;  // use step_subgradient instead of step
  bool record_trace = true;
};

/// Iterates until x_k ∈ C ∩ Q (over the feasibility window) or k reaches max_iter.
template <std::floating_point Real>
RunResult<Real> solve(const RunConfig<Real>& cfg, SolveOptions opts = {}) {
  cfg.validate();
  const BasicProblem<Real>& p = *cfg.problem;
  const IndexSet window = cfg.window();
  RunResult<Real> result{RunStatus::MaxIterExceeded, 0, 0, cfg.x0, {}, {}};
  if (!cfg.overrelaxation.divergent_sum()) {
    result.warnings.push_back("overrelaxation is not declared divergent (sum alpha_k r_k < inf)");
  }
  if (!cfg.overrelaxation.vanishing() && cfg.phi.kind() != PhiKind::One) {
    result.warnings.push_back("non-vanishing overrelaxation: finite convergence needs phi = 1 and r <= R");
  }
  const bool monitor_bounds = cfg.phi.kind() == PhiKind::Custom;
  const Real bound = Real(1e6) * std::max(Real(1), norm(cfg.x0));
  bool bound_flagged = false;

  CorrectionCounter counter(cfg.counter_mode);
  std::uint64_t corrections = 0;
  BasicVector<Real> x = cfg.x0;
  for (std::uint64_t k = 0;; ++k) {
    const bool is_feasible = feasible(p, x, std::span<const Index>(window), cfg.feas_tol);
    if (is_feasible || k == cfg.max_iter) {
      result.status = is_feasible ? RunStatus::FeasibleAt : RunStatus::MaxIterExceeded;
      result.k_final = k;
      if (opts.record_trace) {
        TraceRecord<Real> last{k, counter.value(), x, {}, {}, {}, Real(0), Real(0), Real(0),
                               is_feasible, false, false};
        result.trace.push_back(std::move(last));
      }
      break;
    }
    StepOutcome<Real> out = opts.subgradient_path ? step_subgradient(cfg, x, k, counter)
                                                  : step(cfg, x, k, counter);
    counter.update(out.corrected);
    if (out.corrected) ++corrections;
    if (opts.record_trace) result.trace.push_back(std::move(out.record));
    x = std::move(out.x_next);
    if (monitor_bounds && !bound_flagged && norm(x) > bound) {
      bound_flagged = true;
      result.warnings.push_back("iterates exceeded 1e6 times the initial scale at k=" +
                                std::to_string(k + 1));
    }
  }
  result.corrections = corrections;
  result.final = std::move(x);
  return result;
}

// ---------------------------------------------------------------------------
// Trace CSV.
// ---------------------------------------------------------------------------

/// Shortest decimal that parses back to the same value.
template <std::floating_point Real>
std::string format_real(Real v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string join_indices(const IndexSet& s) {
  std::string out;
  for (std::size_t j = 0; j < s.size(); ++j) {
    if (j) out += ';';
    out += std::to_string(s[j]);
  }
  return out;
}

template <std::floating_point Real>
void write_trace_csv(std::ostream& os, const std::vector<TraceRecord<Real>>& trace, std::size_t dim) {
  os << "k,bracket_k,alpha,r,active,violated,step_norm,feasible";
  for (std::size_t d = 0; d < dim; ++d) os << ",x_" << d;
  os << '\n';
  for (const auto& rec : trace) {
    os << rec.k << ',' << rec.bracket_k << ',';
    if (rec.stepped) os << format_real(rec.alpha);
    os << ',';
    if (rec.stepped) os << format_real(rec.r);
    os << ',' << join_indices(rec.active) << ',' << join_indices(rec.violated) << ','
       << format_real(rec.step_norm) << ',' << (rec.feasible ? 1 : 0);
    for (std::size_t d = 0; d < dim; ++d) os << ',' << format_real(rec.x[d]);
    os << '\n';
  }
}

}  // namespace feasik
