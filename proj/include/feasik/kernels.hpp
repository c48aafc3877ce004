#pragma once

// Per-index evaluation kernels. Evaluating T_i(x) for the indices of one step is pure and
// independent across i, so it may run in parallel; the serial versions are the reference and
// both produce identical results because the combination happens afterwards in index order.

#include <cstddef>
#include <exception>
#include <optional>
#include <span>
#include <vector>

#include "feasik/operators.hpp"
#include "feasik/problem.hpp"

namespace feasik {

template <std::floating_point Real>
struct ActiveEval {
  Index index;
  CutterEval<Real> eval;
};

template <std::floating_point Real>
std::vector<ActiveEval<Real>> evaluate_active_serial(const BasicProblem<Real>& p,
                                                     const BasicVector<Real>& x,
                                                     std::span<const Index> active) {
  std::vector<ActiveEval<Real>> out;
  out.reserve(active.size());
  for (Index i : active) {
    out.push_back({i, p.visit(i, [&](const Constraint<Real>& c) { return apply_cutter(c, x); })});
  }
  return out;
}

template <std::floating_point Real>
std::vector<ActiveEval<Real>> evaluate_active_parallel(const BasicProblem<Real>& p,
                                                       const BasicVector<Real>& x,
                                                       std::span<const Index> active) {
  const auto n = static_cast<std::ptrdiff_t>(active.size());
  std::vector<std::optional<CutterEval<Real>>> slots(active.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t j = 0; j < n; ++j) {
    try {
      slots[j] = p.visit(active[j], [&](const Constraint<Real>& c) { return apply_cutter(c, x); });
    } catch (...) {
#pragma omp critical(feasik_kernel_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  std::vector<ActiveEval<Real>> out;
  out.reserve(active.size());
  for (std::size_t j = 0; j < active.size(); ++j) out.push_back({active[j], std::move(*slots[j])});
  return out;
}

/// Number of violated constraints of the window (serial reference).
template <std::floating_point Real>
std::size_t count_violated_serial(const BasicProblem<Real>& p, const BasicVector<Real>& x,
                                  std::span<const Index> window, Real tol = 0) {
  std::size_t n = 0;
  for (Index i : window) {
    if (!p.visit(i, [&](const Constraint<Real>& c) { return c.member(x, tol); })) ++n;
  }
  return n;
}

template <std::floating_point Real>
std::size_t count_violated_parallel(const BasicProblem<Real>& p, const BasicVector<Real>& x,
                                    std::span<const Index> window, Real tol = 0) {
  const auto n = static_cast<std::ptrdiff_t>(window.size());
  std::size_t count = 0;
  std::exception_ptr failure;
#pragma omp parallel for reduction(+ : count) schedule(static)
  for (std::ptrdiff_t j = 0; j < n; ++j) {
    try {
      if (!p.visit(window[j], [&](const Constraint<Real>& c) { return c.member(x, tol); })) ++count;
    } catch (...) {
#pragma omp critical(feasik_kernel_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return count;
}

}  // namespace feasik
