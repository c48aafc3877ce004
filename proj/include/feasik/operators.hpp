#pragma once

// Cutter applications: metric projections and the subgradient projection.

#include <cmath>
#include <optional>
#include <type_traits>
#include <variant>

#include "feasik/error.hpp"
#include "feasik/problem.hpp"
#include "feasik/vector.hpp"

namespace feasik {

/// Result of one cutter application T_i(x).
template <std::floating_point Real>
struct CutterEval {
  BasicVector<Real> image;  // T_i(x)
  Real displacement_norm;   // ||T_i(x) - x||
  Real residual;            // f_i(x) for sublevel bodies, d(x, C_i) otherwise
  std::optional<Real> subgrad_norm;  // ||g_i(x)||, sublevel bodies only
};

template <std::floating_point Real>
CutterEval<Real> make_eval(const BasicVector<Real>& x, BasicVector<Real> image, Real residual,
                           std::optional<Real> subgrad_norm = std::nullopt) {
  const Real disp = distance(image, x);
  return {std::move(image), disp, residual, subgrad_norm};
}

template <std::floating_point Real>
CutterEval<Real> project_metric(const Halfspace<Real>& h, const BasicVector<Real>& x) {
  const Real dist = std::max(Real(0), (dot(h.a, x) - h.b) / norm(h.a));
  return make_eval(x, detail::halfspace_project(h, x), dist);
}

template <std::floating_point Real>
CutterEval<Real> project_metric(const Ball<Real>& b, const BasicVector<Real>& x) {
  detail::validate_ball(b);
  const Real dist = std::max(Real(0), distance(x, b.center) - b.radius);
  return make_eval(x, detail::ball_project(b, x), dist);
}

template <std::floating_point Real>
CutterEval<Real> project_metric(const Box<Real>& b, const BasicVector<Real>& x) {
  return make_eval(x, detail::box_project(b, x), detail::box_distance(b, x));
}

/// Metric projection onto a constraint body that has a closed form (halfspace, ball, box,
/// or an affine sublevel set).
template <std::floating_point Real>
CutterEval<Real> project_metric(const Constraint<Real>& c, const BasicVector<Real>& x) {
  return std::visit(
      [&](const auto& b) -> CutterEval<Real> {
        using B = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<B, Sublevel<Real>>) {
          const auto h = c.as_halfspace();
          if (!h) throw ConfigError("no closed-form metric projection for this sublevel body");
          CutterEval<Real> e = project_metric(*h, x);
          e.residual = b.f.value(x);
          return e;
        } else {
          return project_metric(b, x);
        }
      },
      c.body());
}

/// P_f(x) = x - (f(x)/||g(x)||^2) g(x) when f(x) > 0, identity otherwise.
template <std::floating_point Real>
CutterEval<Real> project_subgradient(const ConvexFunction<Real>& f, const BasicVector<Real>& x) {
  const Real fx = f.value(x);
  const BasicVector<Real> g = f.subgradient(x);
  const Real gn2 = norm_squared(g);
  const Real gn = std::sqrt(gn2);
  if (!(fx > 0)) return {x, Real(0), fx, gn};
  if (gn2 == 0) {
    throw InconsistentConstraint("inconsistent constraint: positive value with zero subgradient");
  }
  return make_eval(x, x - (fx / gn2) * g, fx, std::optional<Real>(gn));
}

/// T_i(x) using the cutter attached to the constraint.
template <std::floating_point Real>
CutterEval<Real> apply_cutter(const Constraint<Real>& c, const BasicVector<Real>& x) {
  if (c.cutter() == CutterKind::Subgradient) return project_subgradient(*c.function(), x);
  CutterEval<Real> e = project_metric(c, x);
  if (const auto* f = c.function()) e.subgrad_norm = norm(f->subgradient(x));
  return e;
}

template <std::floating_point Real>
struct CutterCheck {
  Real lhs;
  Real rhs;
  bool ok;
};

/// <T(x)-x, z-x> >= ||T(x)-x||^2 for z ∈ fix T, relative tolerance 1e-10.
template <std::floating_point Real>
CutterCheck<Real> check_cutter_property(const BasicVector<Real>& x, const BasicVector<Real>& image,
                                        const BasicVector<Real>& z) {
  const BasicVector<Real> step = image - x;
  const Real lhs = dot(step, z - x);
  const Real rhs = norm_squared(step);
  return {lhs, rhs, lhs >= rhs - Real(1e-10) * (1 + rhs)};
}

template <std::floating_point Real>
CutterCheck<Real> check_cutter_property(const Constraint<Real>& c, const BasicVector<Real>& x,
                                        const BasicVector<Real>& z) {
  return check_cutter_property(x, apply_cutter(c, x).image, z);
}

}  // namespace feasik
