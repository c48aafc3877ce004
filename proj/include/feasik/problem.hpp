#pragma once

// Data model of a convex feasibility problem: find x in C ∩ Q with C = ⋂ C_i.

#include <algorithm>
#include <cstdint>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "feasik/error.hpp"
#include "feasik/vector.hpp"

namespace feasik {

// ---------------------------------------------------------------------------
// Convex functions with a deterministic subgradient selection.
// ---------------------------------------------------------------------------

/// f(x) = <a, x> - b.
template <std::floating_point Real>
struct Affine {
  BasicVector<Real> a;
  Real b;
};

/// f(x) = |x[axis]| - c.
template <std::floating_point Real>
struct AbsCoordMinusC {
  std::size_t axis;
  Real c;
};

/// f(x) = x[axis]^2 - c.
template <std::floating_point Real>
struct QuadCoordMinusC {
  std::size_t axis;
  Real c;
};

/// f(x) = max_j (<a_j, x> - b_j).
template <std::floating_point Real>
struct MaxAffine {
  std::vector<Affine<Real>> pieces;
};

/// f(x) = ||x - center||^2 - radius^2.
template <std::floating_point Real>
struct SquaredDistToBall {
  BasicVector<Real> center;
  Real radius;
};

template <std::floating_point Real>
class ConvexFunction {
 public:
  using Kind = std::variant<Affine<Real>, AbsCoordMinusC<Real>, QuadCoordMinusC<Real>,
                            MaxAffine<Real>, SquaredDistToBall<Real>>;

  ConvexFunction(Kind kind, std::size_t dim) : kind_(std::move(kind)), dim_(dim) { validate(); }

  std::size_t dim() const { return dim_; }
  const Kind& kind() const { return kind_; }

  Real value(const BasicVector<Real>& x) const {
    check(x);
    return std::visit(
        [&](const auto& f) -> Real {
          using F = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<F, Affine<Real>>) {
            return dot(f.a, x) - f.b;
          } else if constexpr (std::is_same_v<F, AbsCoordMinusC<Real>>) {
            return std::abs(x[f.axis]) - f.c;
          } else if constexpr (std::is_same_v<F, QuadCoordMinusC<Real>>) {
            return x[f.axis] * x[f.axis] - f.c;
          } else if constexpr (std::is_same_v<F, MaxAffine<Real>>) {
            return piece_value(f.pieces[active_piece(f, x)], x);
          } else {
            const Real d = distance(x, f.center);
            return d * d - f.radius * f.radius;
          }
        },
        kind_);
  }

  /// The selected element of the subdifferential at x.
  BasicVector<Real> subgradient(const BasicVector<Real>& x) const {
    check(x);
    return std::visit(
        [&](const auto& f) -> BasicVector<Real> {
          using F = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<F, Affine<Real>>) {
            return f.a;
          } else if constexpr (std::is_same_v<F, AbsCoordMinusC<Real>>) {
            BasicVector<Real> g(dim_);
            const Real t = x[f.axis];
            g[f.axis] = t > 0 ? Real(1) : (t < 0 ? Real(-1) : Real(0));
            return g;
          } else if constexpr (std::is_same_v<F, QuadCoordMinusC<Real>>) {
            BasicVector<Real> g(dim_);
            g[f.axis] = 2 * x[f.axis];
            return g;
          } else if constexpr (std::is_same_v<F, MaxAffine<Real>>) {
            return f.pieces[active_piece(f, x)].a;
          } else {
            return Real(2) * (x - f.center);
          }
        },
        kind_);
  }

 private:
  static Real piece_value(const Affine<Real>& p, const BasicVector<Real>& x) {
    return dot(p.a, x) - p.b;
  }

  // Lowest index among the maximizing pieces.
  static std::size_t active_piece(const MaxAffine<Real>& f, const BasicVector<Real>& x) {
    std::size_t best = 0;
    Real best_value = piece_value(f.pieces[0], x);
    for (std::size_t j = 1; j < f.pieces.size(); ++j) {
      const Real v = piece_value(f.pieces[j], x);
      if (v > best_value) {
        best = j;
        best_value = v;
      }
    }
    return best;
  }

  void check(const BasicVector<Real>& x) const {
    if (x.size() != dim_) throw ConfigError("function evaluated at a point of wrong dimension");
  }

  void validate() const {
    if (dim_ == 0) throw ConfigError("function dimension must be positive");
    std::visit(
        [&](const auto& f) {
          using F = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<F, Affine<Real>>) {
            if (f.a.size() != dim_) throw ConfigError("affine: coefficient dimension mismatch");
            if (!std::isfinite(f.b)) throw ConfigError("affine: offset must be finite");
          } else if constexpr (std::is_same_v<F, AbsCoordMinusC<Real>> ||
                               std::is_same_v<F, QuadCoordMinusC<Real>>) {
            if (f.axis >= dim_) throw ConfigError("coordinate function: axis out of range");
            if (!std::isfinite(f.c)) throw ConfigError("coordinate function: c must be finite");
          } else if constexpr (std::is_same_v<F, MaxAffine<Real>>) {
            if (f.pieces.empty()) throw ConfigError("max_affine: at least one piece required");
            for (const auto& p : f.pieces) {
              if (p.a.size() != dim_) throw ConfigError("max_affine: piece dimension mismatch");
              if (!std::isfinite(p.b)) throw ConfigError("max_affine: offset must be finite");
            }
          } else {
            if (f.center.size() != dim_) throw ConfigError("sq_dist_ball: center dimension mismatch");
            if (!(f.radius >= 0) || !std::isfinite(f.radius)) {
              throw ConfigError("sq_dist_ball: radius must be finite and nonnegative");
            }
          }
        },
        kind_);
  }

  Kind kind_;
  std::size_t dim_;
};

// ---------------------------------------------------------------------------
// Closed convex bodies.
// ---------------------------------------------------------------------------

/// {x : <a, x> <= b}.
template <std::floating_point Real>
struct Halfspace {
  BasicVector<Real> a;
  Real b;
};

/// Closed ball B(center, radius).
template <std::floating_point Real>
struct Ball {
  BasicVector<Real> center;
  Real radius;
};

/// Axis-aligned box [lo, hi].
template <std::floating_point Real>
struct Box {
  BasicVector<Real> lo;
  BasicVector<Real> hi;
};

/// Sublevel set S(f, 0) = {x : f(x) <= 0}.
template <std::floating_point Real>
struct Sublevel {
  ConvexFunction<Real> f;
};

namespace detail {

template <std::floating_point Real>
void validate_halfspace(const Halfspace<Real>& h) {
  if (norm_squared(h.a) == 0) throw ConfigError("halfspace: normal vector must be nonzero");
  if (!std::isfinite(h.b)) throw ConfigError("halfspace: offset must be finite");
}

template <std::floating_point Real>
void validate_ball(const Ball<Real>& b) {
  if (!(b.radius > 0) || !std::isfinite(b.radius)) {
    throw ConfigError("ball: radius must be positive");
  }
}

template <std::floating_point Real>
void validate_box(const Box<Real>& b) {
  b.lo.check_dim(b.hi);
  for (std::size_t j = 0; j < b.lo.size(); ++j) {
    if (b.lo[j] > b.hi[j]) throw ConfigError("box: lo must not exceed hi");
  }
}

template <std::floating_point Real>
bool halfspace_contains(const Halfspace<Real>& h, const BasicVector<Real>& x, Real tol) {
  return dot(h.a, x) - h.b <= tol;
}

template <std::floating_point Real>
bool ball_contains(const Ball<Real>& b, const BasicVector<Real>& x, Real tol) {
  return distance(x, b.center) <= b.radius + tol;
}

template <std::floating_point Real>
bool box_contains(const Box<Real>& b, const BasicVector<Real>& x, Real tol) {
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (x[j] < b.lo[j] - tol || x[j] > b.hi[j] + tol) return false;
  }
  return true;
}

// The closed-form projections below round; when the rounded image lands a few
// ulps outside the body, the step length is nudged until it is a member, so
// that fix P == C holds under the exact sign test.
inline constexpr int kNudgeLimit = 64;

template <std::floating_point Real>
BasicVector<Real> halfspace_project(const Halfspace<Real>& h, const BasicVector<Real>& x) {
  const Real excess = dot(h.a, x) - h.b;
  if (excess <= 0) return x;
  Real t = excess / norm_squared(h.a);
  BasicVector<Real> image = x - t * h.a;
  // The increment doubles, so the image moves past the rounding grain of x within a few tries.
  Real delta = std::nextafter(t, std::numeric_limits<Real>::infinity()) - t;
  for (int n = 0; n < kNudgeLimit && !halfspace_contains(h, image, Real(0)); ++n) {
    t += delta;
    delta *= 2;
    image = x - t * h.a;
  }
  return image;
}

template <std::floating_point Real>
BasicVector<Real> ball_project(const Ball<Real>& b, const BasicVector<Real>& x) {
  const Real d = distance(x, b.center);
  if (d <= b.radius) return x;
  Real s = b.radius / d;
  BasicVector<Real> image = b.center + s * (x - b.center);
  Real delta = s - std::nextafter(s, Real(0));
  for (int n = 0; n < kNudgeLimit && !ball_contains(b, image, Real(0)); ++n) {
    s -= delta;
    delta *= 2;
    image = b.center + s * (x - b.center);
  }
  return image;
}

template <std::floating_point Real>
BasicVector<Real> box_project(const Box<Real>& b, const BasicVector<Real>& x) {
  BasicVector<Real> image = x;
  for (std::size_t j = 0; j < x.size(); ++j) image[j] = std::clamp(x[j], b.lo[j], b.hi[j]);
  return image;
}

template <std::floating_point Real>
Real box_distance(const Box<Real>& b, const BasicVector<Real>& x) {
  Real s = 0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const Real e = x[j] < b.lo[j] ? b.lo[j] - x[j] : (x[j] > b.hi[j] ? x[j] - b.hi[j] : Real(0));
    s += e * e;
  }
  return std::sqrt(s);
}

}  // namespace detail

/// Which cutter T_i realizes C_i = fix T_i.
enum class CutterKind { Metric, Subgradient };

/// One constraint set C_i together with its cutter.
template <std::floating_point Real>
class Constraint {
 public:
  using Body = std::variant<Halfspace<Real>, Ball<Real>, Box<Real>, Sublevel<Real>>;

  /// Metric bodies use the metric projection; sublevel bodies use the subgradient projection.
  explicit Constraint(Body body) : body_(std::move(body)) {
    cutter_ = std::holds_alternative<Sublevel<Real>>(body_) ? CutterKind::Subgradient
                                                            : CutterKind::Metric;
    validate();
  }
  Constraint(Body body, CutterKind cutter) : body_(std::move(body)), cutter_(cutter) { validate(); }

  const Body& body() const { return body_; }
  CutterKind cutter() const { return cutter_; }
  std::size_t dim() const { return dim_; }

  bool is_sublevel() const { return std::holds_alternative<Sublevel<Real>>(body_); }
  const ConvexFunction<Real>* function() const {
    const auto* s = std::get_if<Sublevel<Real>>(&body_);
    return s ? &s->f : nullptr;
  }

  /// Halfspace view of a metric body or of an affine sublevel body; nullopt otherwise.
  std::optional<Halfspace<Real>> as_halfspace() const {
    if (const auto* h = std::get_if<Halfspace<Real>>(&body_)) return *h;
    if (const auto* f = function()) {
      if (const auto* aff = std::get_if<Affine<Real>>(&f->kind())) {
        return Halfspace<Real>{aff->a, aff->b};
      }
    }
    return std::nullopt;
  }

  /// x ∈ C_i, with membership measured by f_i(x) <= tol (sublevel) or d(x, C_i) <= tol.
  bool member(const BasicVector<Real>& x, Real tol = 0) const {
    check(x);
    return std::visit(
        [&](const auto& b) -> bool {
          using B = std::decay_t<decltype(b)>;
          if constexpr (std::is_same_v<B, Halfspace<Real>>) {
            return detail::halfspace_contains(b, x, tol);
          } else if constexpr (std::is_same_v<B, Ball<Real>>) {
            return detail::ball_contains(b, x, tol);
          } else if constexpr (std::is_same_v<B, Box<Real>>) {
            return detail::box_contains(b, x, tol);
          } else {
            return b.f.value(x) <= tol;
          }
        },
        body_);
  }

  /// Exact distance d(x, C_i) where a closed form exists.
  std::optional<Real> distance_to(const BasicVector<Real>& x) const {
    check(x);
    return std::visit(
        [&](const auto& b) -> std::optional<Real> {
          using B = std::decay_t<decltype(b)>;
          if constexpr (std::is_same_v<B, Halfspace<Real>>) {
            return std::max(Real(0), (dot(b.a, x) - b.b) / norm(b.a));
          } else if constexpr (std::is_same_v<B, Ball<Real>>) {
            return std::max(Real(0), distance(x, b.center) - b.radius);
          } else if constexpr (std::is_same_v<B, Box<Real>>) {
            return detail::box_distance(b, x);
          } else {
            if (auto h = as_halfspace()) {
              return std::max(Real(0), (dot(h->a, x) - h->b) / norm(h->a));
            }
            return std::nullopt;
          }
        },
        body_);
  }

 private:
  void check(const BasicVector<Real>& x) const {
    if (x.size() != dim_) throw ConfigError("constraint evaluated at a point of wrong dimension");
  }

  void validate() {
    dim_ = std::visit(
        [](const auto& b) -> std::size_t {
          using B = std::decay_t<decltype(b)>;
          if constexpr (std::is_same_v<B, Halfspace<Real>>) {
            detail::validate_halfspace(b);
            return b.a.size();
          } else if constexpr (std::is_same_v<B, Ball<Real>>) {
            detail::validate_ball(b);
            return b.center.size();
          } else if constexpr (std::is_same_v<B, Box<Real>>) {
            detail::validate_box(b);
            return b.lo.size();
          } else {
            return b.f.dim();
          }
        },
        body_);
    if (cutter_ == CutterKind::Subgradient && !is_sublevel()) {
      throw ConfigError("subgradient cutter requires a sublevel body");
    }
    if (cutter_ == CutterKind::Metric && is_sublevel()) {
      const auto h = as_halfspace();
      if (!h) throw ConfigError("metric cutter on a sublevel body requires an affine function");
      detail::validate_halfspace(*h);
    }
  }

  Body body_;
  CutterKind cutter_;
  std::size_t dim_ = 0;
};

// ---------------------------------------------------------------------------
// Outer set Q with exact metric projection.
// ---------------------------------------------------------------------------

template <std::floating_point Real>
struct WholeSpace {};

template <std::floating_point Real>
class OuterSet {
 public:
  using Body = std::variant<WholeSpace<Real>, Halfspace<Real>, Box<Real>, Ball<Real>>;

  OuterSet() = default;
  explicit OuterSet(Body body) : body_(std::move(body)) {
    std::visit(
        [](const auto& b) {
          using B = std::decay_t<decltype(b)>;
          if constexpr (std::is_same_v<B, Halfspace<Real>>) detail::validate_halfspace(b);
          if constexpr (std::is_same_v<B, Ball<Real>>) detail::validate_ball(b);
          if constexpr (std::is_same_v<B, Box<Real>>) detail::validate_box(b);
        },
        body_);
  }

  const Body& body() const { return body_; }
  bool is_whole_space() const { return std::holds_alternative<WholeSpace<Real>>(body_); }

  /// Dimension fixed by the body, or nullopt for the whole space.
  std::optional<std::size_t> dim() const {
    return std::visit(
        [](const auto& b) -> std::optional<std::size_t> {
          using B = std::decay_t<decltype(b)>;
          if constexpr (std::is_same_v<B, WholeSpace<Real>>) {
            return std::nullopt;
          } else if constexpr (std::is_same_v<B, Halfspace<Real>>) {
            return b.a.size();
          } else if constexpr (std::is_same_v<B, Ball<Real>>) {
            return b.center.size();
          } else {
            return b.lo.size();
          }
        },
        body_);
  }

  bool contains(const BasicVector<Real>& x) const {
    return std::visit(
        [&](const auto& b) -> bool {
          using B = std::decay_t<decltype(b)>;
          if constexpr (std::is_same_v<B, WholeSpace<Real>>) {
            return true;
          } else if constexpr (std::is_same_v<B, Halfspace<Real>>) {
            return detail::halfspace_contains(b, x, Real(0));
          } else if constexpr (std::is_same_v<B, Ball<Real>>) {
            return detail::ball_contains(b, x, Real(0));
          } else {
            return detail::box_contains(b, x, Real(0));
          }
        },
        body_);
  }

  /// P_Q(x).
  BasicVector<Real> project(const BasicVector<Real>& x) const {
    return std::visit(
        [&](const auto& b) -> BasicVector<Real> {
          using B = std::decay_t<decltype(b)>;
          if constexpr (std::is_same_v<B, WholeSpace<Real>>) {
            return x;
          } else if constexpr (std::is_same_v<B, Halfspace<Real>>) {
            return detail::halfspace_project(b, x);
          } else if constexpr (std::is_same_v<B, Ball<Real>>) {
            return detail::ball_project(b, x);
          } else {
            return detail::box_project(b, x);
          }
        },
        body_);
  }

 private:
  Body body_ = WholeSpace<Real>{};
};

// ---------------------------------------------------------------------------
// Problem instance.
// ---------------------------------------------------------------------------

/// Asserted Slater data: B(z, 2R) ⊆ C and z ∈ Q.
template <std::floating_point Real>
struct CertifiedInterior {
  BasicVector<Real> z;
  Real R;
};

template <std::floating_point Real>
class BasicProblem {
 public:
  using Generator = std::function<Constraint<Real>(Index)>;

  /// Finite pool I = {1, ..., constraints.size()}.
  BasicProblem(std::size_t dim, std::vector<Constraint<Real>> constraints, OuterSet<Real> outer = {},
               std::optional<CertifiedInterior<Real>> interior = std::nullopt)
      : dim_(dim),
        finite_(std::move(constraints)),
        outer_(std::move(outer)),
        interior_(std::move(interior)) {
    if (finite_.empty()) throw ConfigError("problem needs at least one constraint");
    for (const auto& c : finite_) {
      if (c.dim() != dim_) throw ConfigError("constraint dimension does not match problem dim");
    }
    validate_common();
  }

  /// Lazy pool. cardinality == nullopt means a countably infinite pool.
  BasicProblem(std::size_t dim, Generator generator, std::optional<std::size_t> cardinality,
               OuterSet<Real> outer = {},
               std::optional<CertifiedInterior<Real>> interior = std::nullopt)
      : dim_(dim),
        generator_(std::move(generator)),
        lazy_cardinality_(cardinality),
        outer_(std::move(outer)),
        interior_(std::move(interior)) {
    if (!generator_) throw ConfigError("lazy pool needs a generator");
    if (cardinality && *cardinality == 0) throw ConfigError("problem needs at least one constraint");
    validate_common();
  }

  std::size_t dim() const { return dim_; }
  bool is_lazy() const { return static_cast<bool>(generator_); }
  /// m, or nullopt when m = ∞.
  std::optional<std::size_t> cardinality() const {
    return is_lazy() ? lazy_cardinality_ : std::optional<std::size_t>(finite_.size());
  }
  bool is_finite() const { return cardinality().has_value(); }
  const OuterSet<Real>& outer() const { return outer_; }
  const std::optional<CertifiedInterior<Real>>& interior() const { return interior_; }
  const std::vector<Constraint<Real>>& constraints() const { return finite_; }

  void check_index(Index i) const {
    const auto m = cardinality();
    if (i == 0 || (m && i > *m)) {
      throw IndexError("index out of pool: " + std::to_string(i));
    }
  }

  /// Calls f(C_i). Finite pools pass a reference to stored data; lazy pools a temporary.
  template <class F>
  decltype(auto) visit(Index i, F&& f) const {
    check_index(i);
    if (is_lazy()) {
      const Constraint<Real> c = generator_(i);
      if (c.dim() != dim_) throw ConfigError("generated constraint has wrong dimension");
      return std::forward<F>(f)(c);
    }
    return std::forward<F>(f)(finite_[i - 1]);
  }

  Constraint<Real> constraint(Index i) const {
    return visit(i, [](const Constraint<Real>& c) { return c; });
  }

  /// {1, ..., m}; throws for infinite pools.
  IndexSet all_indices() const {
    const auto m = cardinality();
    if (!m) throw ConfigError("infinite pool has no full index window; supply a finite window");
    IndexSet out(*m);
    for (Index i = 0; i < *m; ++i) out[i] = i + 1;
    return out;
  }

 private:
  void validate_common() const {
    if (dim_ == 0) throw ConfigError("problem dimension must be positive");
    if (const auto d = outer_.dim(); d && *d != dim_) {
      throw ConfigError("outer set dimension does not match problem dim");
    }
    if (interior_) {
      if (interior_->z.size() != dim_) throw ConfigError("interior point dimension mismatch");
      if (!(interior_->R > 0)) throw ConfigError("interior radius must be positive");
    }
  }

  std::size_t dim_;
  std::vector<Constraint<Real>> finite_;
  Generator generator_;
  std::optional<std::size_t> lazy_cardinality_;
  OuterSet<Real> outer_;
  std::optional<CertifiedInterior<Real>> interior_;
};

using Problem = BasicProblem<double>;

/// I_+(x) restricted to a finite window: {i ∈ window : x ∉ C_i}, sorted ascending.
template <std::floating_point Real>
IndexSet violated_indices(const BasicProblem<Real>& p, const BasicVector<Real>& x,
                          std::span<const Index> window, Real tol = 0) {
  IndexSet out;
  for (Index i : window) {
    if (!p.visit(i, [&](const Constraint<Real>& c) { return c.member(x, tol); })) out.push_back(i);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

template <std::floating_point Real>
IndexSet violated_indices(const BasicProblem<Real>& p, const BasicVector<Real>& x, Real tol = 0) {
  const IndexSet all = p.all_indices();
  return violated_indices(p, x, std::span<const Index>(all), tol);
}

/// x ∈ Q and no constraint of the window is violated. For infinite pools the window is a
/// caller-chosen witness set; the answer says nothing about indices outside it.
template <std::floating_point Real>
bool feasible(const BasicProblem<Real>& p, const BasicVector<Real>& x,
              std::span<const Index> window, Real tol = 0) {
  if (!p.outer().contains(x)) return false;
  for (Index i : window) {
    if (!p.visit(i, [&](const Constraint<Real>& c) { return c.member(x, tol); })) return false;
  }
  return true;
}

template <std::floating_point Real>
bool feasible(const BasicProblem<Real>& p, const BasicVector<Real>& x, Real tol = 0) {
  const IndexSet all = p.all_indices();
  return feasible(p, x, std::span<const Index>(all), tol);
}

/// Outcome of a sampled check of the certified interior.
struct InteriorCheck {
  bool z_in_q = false;
  std::size_t samples = 0;
  std::size_t failures = 0;
  bool ok() const { return z_in_q && failures == 0; }
};

/// Spot check of B(z, 2R) ⊆ C: z + 2R·e for random unit directions e, plus the exact test z ∈ Q.
template <std::floating_point Real>
InteriorCheck check_interior(const BasicProblem<Real>& p, std::span<const Index> window,
                             std::size_t samples, std::uint64_t seed) {
  if (!p.interior()) throw PreconditionError("problem has no certified interior");
  const auto& [z, R] = *p.interior();
  InteriorCheck out;
  out.z_in_q = p.outer().contains(z);
  out.samples = samples;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  for (std::size_t s = 0; s < samples; ++s) {
    BasicVector<Real> e(p.dim());
    Real len = 0;
    while (len == 0) {
      for (std::size_t j = 0; j < p.dim(); ++j) e[j] = static_cast<Real>(normal(rng));
      len = norm(e);
    }
    const BasicVector<Real> probe = z + (2 * R / len) * e;
    for (Index i : window) {
      if (!p.visit(i, [&](const Constraint<Real>& c) { return c.member(probe); })) {
        ++out.failures;
        break;
      }
    }
  }
  return out;
}

}  // namespace feasik
