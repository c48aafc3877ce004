#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "feasik/certificates.hpp"
#include "feasik/instances.hpp"
#include "support.hpp"

using namespace feasik;
using feasik::testing::uniform_point;
using feasik::testing::unit_direction;

namespace {

using C = Control<double>;
using O = Overrelaxation<double>;

std::shared_ptr<const Problem> two_halfspaces() {
  return std::make_shared<const Problem>(
      2, std::vector<Constraint<double>>{Constraint<double>(Halfspace<double>{Vector{1, 0}, 0}),
                                         Constraint<double>(Halfspace<double>{Vector{0, 1}, 0})});
}

/// b_{k+1} = b_k / (2 sqrt 2 / sqrt b_k + 4)^2 carried out in long double.
long double b_extended(int k) {
  long double b = 0.5L;
  for (int j = 0; j < k; ++j) {
    const long double d = 2 * std::sqrt(2.0L) / std::sqrt(b) + 4;
    b = b / (d * d);
  }
  return b;
}

}  // namespace

TEST_CASE("descent certificate on two halfspaces") {
  RunConfig<double> cfg(two_halfspaces(), C::Cyclic{{1, 2}}, Vector{1, 1});
  const RunResult<double> run = solve(cfg);
  REQUIRE(run.status == RunStatus::FeasibleAt);
  const auto cert = check_descent(*cfg.problem, run.trace, Vector{-3, -3}, 1.0, cfg.lambda_floor());
  CHECK(cfg.lambda_floor() == 1);
  CHECK(cert.ok());
  CHECK(cert.applicable > 0);
  for (const auto& e : cert.entries) {
    if (e.applicable) CHECK(e.slack >= 0);
  }
}

TEST_CASE("descent certificate skips steps with rho > R and idle steps") {
  RunConfig<double> cfg(two_halfspaces(), C::Cyclic{{1, 2}}, Vector{1, 1});
  cfg.overrelaxation = O(O::Harmonic{10});
  const RunResult<double> run = solve(cfg);
  const auto cert = check_descent(*cfg.problem, run.trace, Vector{-3, -3}, 1.0, 1.0);
  REQUIRE_FALSE(cert.entries.empty());
  CHECK(cert.entries[0].rho == 10);
  CHECK_FALSE(cert.entries[0].applicable);
  CHECK(cert.ok());

  // Start violating only C_2, so the first cyclic step (index 1) is idle.
  RunConfig<double> idle_cfg(two_halfspaces(), C::Cyclic{{1, 2}}, Vector{-1, 1});
  const RunResult<double> idle_run = solve(idle_cfg);
  const auto idle = check_descent(*idle_cfg.problem, idle_run.trace, Vector{-3, -3}, 1.0, 1.0);
  CHECK_FALSE(idle.entries[0].applicable);
  CHECK(idle.entries[0].lhs == idle.entries[0].rhs);
  CHECK(check_fixed_points(*idle_cfg.problem, idle_run.trace).empty());
}

TEST_CASE("descent certificate preconditions") {
  const auto boxed = std::make_shared<const Problem>(
      2, two_halfspaces()->constraints(), OuterSet<double>(Box<double>{Vector{-1, -1}, Vector{1, 1}}));
  RunConfig<double> cfg(boxed, C::Cyclic{{1, 2}}, Vector{1, 1});
  const RunResult<double> run = solve(cfg);
  CHECK_THROWS_AS(check_descent(*boxed, run.trace, Vector{-3, -3}, 1.0, 1.0), PreconditionError);
  CHECK_THROWS_AS(check_descent(*boxed, run.trace, Vector{-0.5, -0.5}, 0.0, 1.0), PreconditionError);
  CHECK_THROWS_AS(check_descent(*boxed, run.trace, Vector{-0.5, -0.5}, 0.1, 1.5), PreconditionError);
}

TEST_CASE("descent certificate on random instances") {
  for (std::uint64_t id = 0; id < 25; ++id) {
    const Instance inst = random_instance(3, id);
    const std::size_t m = *inst.problem->cardinality();
    for (const C& control : {C(cyclic_control<double>(m)), C(shuffled_rounds<double>(m, id)),
                             C(C::RemotestSet{}), C(uniform_singletons<double>(m, id))}) {
      for (PhiKind phi : {PhiKind::One, PhiKind::SubgradNorm}) {
        RunConfig<double> cfg(inst.problem, control, inst.x0);
        cfg.phi = phi;
        const RunResult<double> run = solve(cfg);
        CHECK(run.status == RunStatus::FeasibleAt);
        const auto cert = check_descent(*inst.problem, run.trace, inst.z, inst.R, cfg.lambda_floor());
        CHECK(cert.violations == 0);
        CHECK(check_fixed_points(*inst.problem, run.trace).empty());
      }
    }
  }
}

TEST_CASE("simultaneous steps satisfy the descent bound with the weight floor") {
  for (std::uint64_t id = 0; id < 25; ++id) {
    const Instance inst = random_instance(8, id);
    RunConfig<double> cfg(inst.problem, C::Explicit{{inst.problem->all_indices()}}, inst.x0);
    cfg.weights = WeightKind::UniformOverViolated;
    cfg.relaxation = Relaxation<double>::constant(1.5);
    const RunResult<double> run = solve(cfg);
    const auto cert = check_descent(*inst.problem, run.trace, inst.z, inst.R, cfg.lambda_floor());
    CHECK(cert.ok());
  }
}

TEST_CASE("fixed-point check flags a forged idle step") {
  RunConfig<double> cfg(two_halfspaces(), C::Cyclic{{1, 2}}, Vector{1, 1});
  RunResult<double> run = solve(cfg);
  REQUIRE(run.trace.size() >= 2);
  run.trace[0].corrected = false;  // x_0 violates C_1, so an idle step there is impossible
  const auto bad = check_fixed_points(*cfg.problem, run.trace);
  REQUIRE(bad.size() == 1);
  CHECK(bad[0] == 0);
}

TEST_CASE("single-operator inequality examples") {
  const Constraint<double> h(Halfspace<double>{Vector{1, 0}, 0});
  const auto r = check_single_operator(h, Vector{1, 0}, Vector{-2, 0}, 1.0, 1.0);
  CHECK(r.u == Vector{-1, 0});
  CHECK(r.lhs == 1);
  CHECK(r.rhs == 5);
  CHECK(r.ok);

  const auto two = check_single_operator(h, Vector{1, 0}, Vector{-2, 0}, 1.0, 2.0);
  CHECK(two.rhs == 9);
  CHECK(two.ok);

  CHECK_THROWS_WITH_AS(check_single_operator(h, Vector{-1, 0}, Vector{-2, 0}, 1.0, 1.0),
                       "inequality hypothesis violated: x ∈ fix T", PreconditionError);
  CHECK_THROWS_AS(check_single_operator(h, Vector{1, 0}, Vector{-2, 0}, 1.0, 2.5), ConfigError);
}

TEST_CASE("single-operator inequality on random tuples") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u01(0, 1);
  int failures = 0;
  for (int s = 0; s < 1000; ++s) {
    const std::size_t n = 2 + s % 4;
    const Vector a = (0.5 + 2 * u01(rng)) * unit_direction(rng, n);
    const double b = 4 * u01(rng) - 2;
    const Constraint<double> h(Halfspace<double>{a, b});
    const double rho = 0.05 + 2 * u01(rng);
    const double alpha = std::max(1e-3, 2 * u01(rng));
    // y strictly inside with B(y, rho) ⊆ {<a, .> <= b}.
    Vector y = uniform_point(rng, n, -3, 3);
    const double slack_y = dot(a, y) - (b - rho * norm(a));
    if (slack_y > 0) y -= (slack_y / norm_squared(a) + u01(rng)) * a;
    Vector x = uniform_point(rng, n, -3, 3);
    const double slack_x = dot(a, x) - b;
    if (slack_x <= 0) x += (-slack_x / norm_squared(a) + 0.01 + u01(rng)) * a;
    failures += !check_single_operator(h, x, y, rho, alpha).ok;
  }
  CHECK(failures == 0);
}

TEST_CASE("slater delta") {
  const std::vector<ConvexFunction<double>> fs{ConvexFunction<double>(AbsCoordMinusC<double>{1, 1}, 2),
                                               ConvexFunction<double>(QuadCoordMinusC<double>{0, 1}, 2)};
  CHECK(fs[0].value(Vector{0, 0}) == -1);
  CHECK(fs[1].value(Vector{0, 0}) == -1);
  CHECK(slater_delta(fs, Vector{0, 0}, 2.0) == 0.5);
  CHECK(slater_delta(fs, Vector{0, 0}, 4.0) == 0.25);
  CHECK_THROWS_WITH_AS(slater_delta(fs, Vector{0, 1}, 2.0), "Slater point invalid", PreconditionError);
}

TEST_CASE("counterexample 1 oracle") {
  CHECK(oracle_a1<double>(0) == Vector{1, 1});
  CHECK(oracle_a1<double>(1) == Vector{0, 1});
  CHECK(oracle_a1<double>(2) == Vector{0, 0.25});
  CHECK(oracle_a1<double>(3) == Vector{0, 0.25});
  CHECK(oracle_a1<double>(4) == Vector{0, 0.0625});
}

TEST_CASE("counterexample 1 reproduction") {
  const A1Report raw = reproduce_a1<long double>(CounterMode::Raw);
  CHECK(raw.pass);
  CHECK(raw.max_rel_error_y2k <= 1e-12);
  CHECK(raw.status == RunStatus::MaxIterExceeded);
  const A1Report bracketed = reproduce_a1<double>(CounterMode::Bracketed);
  CHECK(bracketed.pass);
  CHECK(bracketed.status == RunStatus::FeasibleAt);
}

TEST_CASE("counterexample 2 oracle") {
  CHECK(oracle_a2(0).b == 0.5);
  CHECK(oracle_a2(0).x == 2);
  CHECK(oracle_a2(1).b == 1.0 / 128.0);
  CHECK(b_extended(1) == 1.0L / 128.0L);
  CHECK(static_cast<double>(b_extended(2)) == doctest::Approx(1.0 / 165888.0).epsilon(1e-15));
  CHECK(oracle_a2(2).b == doctest::Approx(static_cast<double>(b_extended(2))).epsilon(1e-15));
  for (int k = 3; k <= 30; ++k) {
    CHECK(oracle_a2(static_cast<std::uint64_t>(k)).b ==
          doctest::Approx(static_cast<double>(b_extended(k))).epsilon(1e-13));
  }
}

TEST_CASE("counterexample 2 reproduction") {
  const A2Report raw = reproduce_a2(CounterMode::Raw, 20'000, 30);
  CHECK(raw.pass);
  CHECK(raw.b1_exact);
  CHECK(raw.rows.size() == 31);
  CHECK(*raw.rows[0].position == 2);
  CHECK(*raw.rows[1].position == 129);
  CHECK(raw.max_rel_error <= 1e-12);
  const A2Report bracketed = reproduce_a2(CounterMode::Bracketed);
  CHECK(bracketed.pass);
}
