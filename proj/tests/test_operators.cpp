#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "feasik/operators.hpp"
#include "support.hpp"

using namespace feasik;
using feasik::testing::uniform_point;
using feasik::testing::unit_direction;

namespace {

ConvexFunction<double> square_x() { return {QuadCoordMinusC<double>{0, 1}, 2}; }
ConvexFunction<double> abs_y() { return {AbsCoordMinusC<double>{1, 1}, 2}; }

/// Brute-force nearest point of the halfspace on a grid around x (oracle for the closed form).
Vector grid_nearest(const Halfspace<double>& h, const Vector& x, double half_width, int steps) {
  Vector best = x;
  double best_d = std::numeric_limits<double>::infinity();
  for (int i = -steps; i <= steps; ++i) {
    for (int j = -steps; j <= steps; ++j) {
      const Vector z{x[0] + half_width * i / steps, x[1] + half_width * j / steps};
      if (dot(h.a, z) > h.b) continue;
      const double d = distance(z, x);
      if (d < best_d) {
        best_d = d;
        best = z;
      }
    }
  }
  return best;
}

/// A random constraint of each cutter family, with a sampler for points of its fixed set.
struct Family {
  Constraint<double> c;
  std::function<Vector(std::mt19937_64&)> member;
};

std::vector<Family> families(std::mt19937_64& rng) {
  std::vector<Family> out;
  const Vector a = 1.5 * unit_direction(rng, 3);
  out.push_back({Constraint<double>(Halfspace<double>{a, 0.4}), [a](std::mt19937_64& r) {
                   Vector z = uniform_point(r, 3, -3, 3);
                   const double excess = dot(a, z) - 0.4;
                   if (excess > 0) z -= (excess / norm_squared(a) + 0.1) * a;
                   return z;
                 }});
  out.push_back({Constraint<double>(Ball<double>{Vector{0.2, -0.3, 1}, 1.3}), [](std::mt19937_64& r) {
                   return Vector{0.2, -0.3, 1} + (1.3 * std::uniform_real_distribution<double>(0, 1)(r)) *
                                                     unit_direction(r, 3);
                 }});
  out.push_back({Constraint<double>(Box<double>{Vector{-1, 0, -2}, Vector{1, 0.5, 2}}),
                 [](std::mt19937_64& r) {
                   return Vector{std::uniform_real_distribution<double>(-1, 1)(r),
                                 std::uniform_real_distribution<double>(0, 0.5)(r),
                                 std::uniform_real_distribution<double>(-2, 2)(r)};
                 }});
  // Subgradient projections: fix P_f = {f <= 0}.
  const ConvexFunction<double> ball_fn(SquaredDistToBall<double>{Vector{0, 1, 0}, 1}, 3);
  out.push_back({Constraint<double>(Sublevel<double>{ball_fn}), [](std::mt19937_64& r) {
                   return Vector{0, 1, 0} + std::uniform_real_distribution<double>(0, 1)(r) *
                                                unit_direction(r, 3);
                 }});
  const ConvexFunction<double> maxaff(
      MaxAffine<double>{{{Vector{1, 0, 0}, 1}, {Vector{0, 1, 1}, 1}, {Vector{-1, -1, 0}, 2}}}, 3);
  out.push_back({Constraint<double>(Sublevel<double>{maxaff}), [maxaff](std::mt19937_64& r) {
                   for (;;) {
                     const Vector z = uniform_point(r, 3, -3, 3);
                     if (maxaff.value(z) <= 0) return z;
                   }
                 }});
  const ConvexFunction<double> quad(QuadCoordMinusC<double>{2, 2}, 3);
  out.push_back({Constraint<double>(Sublevel<double>{quad}), [](std::mt19937_64& r) {
                   Vector z = uniform_point(r, 3, -3, 3);
                   z[2] = std::uniform_real_distribution<double>(-1.4, 1.4)(r);
                   return z;
                 }});
  return out;
}

}  // namespace

TEST_CASE("halfspace projection examples") {
  const CutterEval<double> e = project_metric(Halfspace<double>{Vector{1, 0}, 0}, Vector{2, 3});
  CHECK(e.image == Vector{0, 3});
  CHECK(e.displacement_norm == 2);
  CHECK(e.residual == 2);

  const CutterEval<double> in = project_metric(Halfspace<double>{Vector{1, 0}, 0}, Vector{-1, 3});
  CHECK(in.image == Vector{-1, 3});
  CHECK(in.displacement_norm == 0);

  const Halfspace<double> h{Vector{1, 1}, 1};
  const CutterEval<double> diag = project_metric(h, Vector{2, 2});
  CHECK(diag.image == Vector{0.5, 0.5});
  const Vector coarse = grid_nearest(h, Vector{2, 2}, 2.0, 400);
  CHECK(distance(coarse, diag.image) <= 0.01);
}

TEST_CASE("ball and box projections") {
  const CutterEval<double> b = project_metric(Ball<double>{Vector{0, 0}, 1}, Vector{3, 4});
  CHECK(b.image[0] == doctest::Approx(0.6));
  CHECK(b.image[1] == doctest::Approx(0.8));
  CHECK(b.displacement_norm == doctest::Approx(4));
  const CutterEval<double> x = project_metric(Box<double>{Vector{-1, -1}, Vector{1, 1}}, Vector{3, 0.5});
  CHECK(x.image == Vector{1, 0.5});
  CHECK(x.residual == 2);
  CHECK_THROWS_AS(project_metric(Ball<double>{Vector{0, 0}, -1}, Vector{1, 1}), ConfigError);
}

TEST_CASE("subgradient projection examples") {
  const CutterEval<double> q = project_subgradient(square_x(), Vector{2, 0});
  CHECK(q.image == Vector{1.25, 0});
  CHECK(q.residual == 3);
  CHECK(*q.subgrad_norm == 4);

  const CutterEval<double> a = project_subgradient(abs_y(), Vector{0, 2});
  CHECK(a.image == Vector{0, 1});

  const CutterEval<double> idle = project_subgradient(abs_y(), Vector{0, 0.5});
  CHECK(idle.image == Vector{0, 0.5});
  CHECK(idle.displacement_norm == 0);
  CHECK(idle.residual == -0.5);
}

TEST_CASE("subgradient projection with a zero subgradient signals an empty sublevel set") {
  // f(x) = x_0^2 + 1 is positive with gradient 0 at the origin.
  const ConvexFunction<double> f(QuadCoordMinusC<double>{0, -1}, 2);
  CHECK_THROWS_WITH_AS(project_subgradient(f, Vector{0, 0}),
                       "inconsistent constraint: positive value with zero subgradient",
                       InconsistentConstraint);
}

TEST_CASE("subgradient projection lands on the linearization") {
  std::mt19937_64 rng(21);
  const std::vector<ConvexFunction<double>> fs{
      ConvexFunction<double>(SquaredDistToBall<double>{Vector{0, 1, 0}, 1}, 3),
      ConvexFunction<double>(QuadCoordMinusC<double>{1, 0.5}, 3),
      ConvexFunction<double>(AbsCoordMinusC<double>{0, 0.25}, 3),
      ConvexFunction<double>(Affine<double>{Vector{1, -1, 2}, 0.5}, 3)};
  for (const auto& f : fs) {
    for (int s = 0; s < 1000; ++s) {
      const Vector x = uniform_point(rng, 3, -3, 3);
      const double fx = f.value(x);
      if (!(fx > 0)) continue;
      const CutterEval<double> e = project_subgradient(f, x);
      const double lin = dot(f.subgradient(x), e.image - x);
      CHECK(std::abs(lin + fx) <= 1e-12 * std::max(1.0, fx));
    }
  }
}

TEST_CASE("cutter property examples") {
  const Constraint<double> h(Halfspace<double>{Vector{1, 0}, 0});
  const CutterCheck<double> r = check_cutter_property(h, Vector{2, 3}, Vector{-1, 3});
  CHECK(r.lhs == 6);
  CHECK(r.rhs == 4);
  CHECK(r.ok);
  const CutterCheck<double> fixed = check_cutter_property(h, Vector{-1, 0}, Vector{-2, 5});
  CHECK(fixed.lhs == 0);
  CHECK(fixed.rhs == 0);
  CHECK(fixed.ok);
  // A point that is not a cutter image fails the check.
  CHECK_FALSE(check_cutter_property(Vector{2, 0}, Vector{-5, 0}, Vector{0, 0}).ok);
}

TEST_CASE("cutter property on every family") {
  std::mt19937_64 rng(8);
  for (const auto& fam : families(rng)) {
    int failures = 0;
    for (int s = 0; s < 10000; ++s) {
      const Vector x = uniform_point(rng, 3, -5, 5);
      const Vector z = fam.member(rng);
      REQUIRE(fam.c.member(z));
      failures += !check_cutter_property(fam.c, x, z).ok;
    }
    CHECK(failures == 0);
  }
}

TEST_CASE("metric projections are firmly nonexpansive") {
  std::mt19937_64 rng(13);
  const std::vector<Constraint<double>> cs{
      Constraint<double>(Halfspace<double>{Vector{0.3, -1, 2}, 0.1}),
      Constraint<double>(Ball<double>{Vector{1, 1, 1}, 0.5}),
      Constraint<double>(Box<double>{Vector{-1, -1, -1}, Vector{0, 2, 0.5}})};
  for (const auto& c : cs) {
    for (int s = 0; s < 2000; ++s) {
      const Vector x = uniform_point(rng, 3, -4, 4);
      const Vector y = uniform_point(rng, 3, -4, 4);
      const Vector px = apply_cutter(c, x).image;
      const Vector py = apply_cutter(c, y).image;
      CHECK(norm_squared(px - py) <= dot(px - py, x - y) + 1e-10);
    }
  }
}

TEST_CASE("displacement is zero exactly on members") {
  std::mt19937_64 rng(17);
  for (const auto& fam : families(rng)) {
    for (int s = 0; s < 500; ++s) {
      const Vector z = fam.member(rng);
      CHECK(apply_cutter(fam.c, z).displacement_norm == 0);
      const Vector x = uniform_point(rng, 3, -5, 5);
      CHECK((apply_cutter(fam.c, x).displacement_norm == 0) == fam.c.member(x));
    }
  }
}

TEST_CASE("metric cutter on an affine sublevel set") {
  const Sublevel<double> aff{ConvexFunction<double>(Affine<double>{Vector{1, 1}, 1}, 2)};
  const Constraint<double> metric(aff, CutterKind::Metric);
  const Constraint<double> subgrad(aff);
  const CutterEval<double> m = apply_cutter(metric, Vector{2, 2});
  const CutterEval<double> s = apply_cutter(subgrad, Vector{2, 2});
  CHECK(m.image == Vector{0.5, 0.5});
  CHECK(s.image == Vector{0.5, 0.5});
  CHECK(m.residual == 3);
  CHECK(*m.subgrad_norm == doctest::Approx(std::sqrt(2.0)));
}
