#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "feasik/controls.hpp"

using namespace feasik;
using C = Control<double>;

namespace {

Problem two_halfspaces() {
  return Problem(2, {Constraint<double>(Halfspace<double>{Vector{1, 0}, 0}),
                     Constraint<double>(Halfspace<double>{Vector{0, 1}, 0})});
}

Problem abs_and_square() {
  return Problem(
      2, {Constraint<double>(Sublevel<double>{ConvexFunction<double>(AbsCoordMinusC<double>{1, 1}, 2)}),
          Constraint<double>(Sublevel<double>{ConvexFunction<double>(QuadCoordMinusC<double>{0, 1}, 2)})});
}

/// m halfspaces {x_i <= 0} in R^m.
Problem orthant(std::size_t m) {
  std::vector<Constraint<double>> cs;
  for (std::size_t i = 0; i < m; ++i) {
    Vector a(m);
    a[i] = 1;
    cs.emplace_back(Halfspace<double>{a, 0});
  }
  return Problem(m, cs);
}

}  // namespace

TEST_CASE("cyclic control") {
  const Problem p = two_halfspaces();
  const C c = C::Cyclic{{1, 2}};
  const Vector x{0, 0};
  CHECK(c.next(0, x, p) == IndexSet{1});
  CHECK(c.next(1, x, p) == IndexSet{2});
  CHECK(c.next(2, x, p) == IndexSet{1});
  CHECK(c.max_card() == 1);
  CHECK_FALSE(c.is_adaptive());
}

TEST_CASE("maximal controls") {
  const Problem p = two_halfspaces();
  CHECK(C(C::RemotestSet{}).next(0, Vector{2, 1}, p) == IndexSet{1});
  CHECK(C(C::RemotestSet{}).next(0, Vector{1, 2}, p) == IndexSet{2});
  // Ties go to the lowest index.
  CHECK(C(C::RemotestSet{}).next(0, Vector{1, 1}, p) == IndexSet{1});
  CHECK(C(C::RemotestSet{}).next(0, Vector{-1, -1}, p) == IndexSet{1});
  CHECK(C(C::MaxDisplacement{}).next(0, Vector{0.5, 3}, p) == IndexSet{2});
  CHECK(C(C::MaxViolation{}).next(0, Vector{2, 2}, abs_and_square()) == IndexSet{2});
  CHECK_THROWS_AS(C(C::MaxViolation{}).validate(p), ConfigError);
}

TEST_CASE("maximal controls need a finite pool") {
  const Problem lazy(1, [](Index) { return Constraint<double>(Halfspace<double>{Vector{1}, 0}); },
                     std::nullopt);
  CHECK_THROWS_WITH_AS(C(C::RemotestSet{}).validate(lazy), "maximal control requires finite pool",
                       ConfigError);
  CHECK_THROWS_WITH_AS(C(C::MaxDisplacement{}).next(0, Vector{1}, lazy),
                       "maximal control requires finite pool", ConfigError);
}

TEST_CASE("control shape validation") {
  CHECK_THROWS_AS(C(C::Cyclic{{}}), ConfigError);
  CHECK_THROWS_AS(C(C::Explicit{{{1}, {}}}), ConfigError);
  CHECK_THROWS_AS(C(C::RandomSets{{{{1}, 0.5}, {{2}, 0.4}}, 1}), ConfigError);
  CHECK_THROWS_AS(C(C::RandomSets{{{{1}, 1.2}, {{2}, -0.2}}, 1}), ConfigError);
  CHECK_NOTHROW(C(C::RandomSets{{{{1}, 0.3}, {{2}, 0.7}}, 1}));
  CHECK_THROWS_AS(C(C::Cyclic{{1, 3}}).validate(two_halfspaces()), IndexError);
}

TEST_CASE("emitted sets are nonempty, sorted and bounded by M") {
  const Problem p = orthant(5);
  const std::vector<C> controls{
      C::Intermittent{{{3, 1}, {2, 5, 4}}, 2},
      C::Explicit{{{5, 1, 5}, {2}}},
      C::RandomSets{{{{1, 2}, 0.25}, {{3, 4, 5}, 0.75}}, 9},
      shuffled_rounds<double>(5, 3),
      expanding_control<double>(5),
  };
  const Vector x{1, -1, 1, -1, 1};
  for (const auto& c : controls) {
    for (std::uint64_t k = 0; k < 500; ++k) {
      const IndexSet s = c.next(k, x, p);
      CHECK_FALSE(s.empty());
      CHECK(std::is_sorted(s.begin(), s.end()));
      CHECK(std::adjacent_find(s.begin(), s.end()) == s.end());
      CHECK(s.size() <= c.max_card());
    }
  }
}

TEST_CASE("cyclic and intermittent controls cover every window of length s") {
  const Problem p = orthant(4);
  const Vector x(4);
  const IndexSet universe{1, 2, 3, 4};
  CHECK(covers_every_window(C(C::Cyclic{{1, 2, 3, 4}}), p, x, universe, 4, 12));
  CHECK(covers_every_window(C(C::Intermittent{{{1, 2}, {3}, {4, 1}}, 3}), p, x, universe, 3, 9));
  CHECK(covers_every_window(shuffled_rounds<double>(4, 7), p, x, universe, 7, 21));
  CHECK_FALSE(covers_every_window(C(C::Cyclic{{1, 2, 3}}), p, x, universe, 3, 9));
  // Gaps grow without bound, so no fixed window works.
  CHECK_FALSE(covers_every_window(expanding_control<double>(4), p, x, universe, 8, 200));
}

TEST_CASE("expanding control repeats index j times in round j") {
  const Problem p = orthant(3);
  const C c = expanding_control<double>(3);
  IndexSet seq;
  for (std::uint64_t k = 0; k < 18; ++k) seq.push_back(c.next(k, Vector(3), p)[0]);
  CHECK(seq == IndexSet{1, 2, 3, 1, 1, 2, 2, 3, 3, 1, 1, 1, 2, 2, 2, 3, 3, 3});
}

TEST_CASE("random control: every index of a positive atom appears") {
  const std::size_t m = 12;
  const Problem p = orthant(m);
  const C c = uniform_singletons<double>(m, 77);
  std::set<Index> seen;
  for (std::uint64_t k = 0; k < 10000; ++k) seen.insert(c.next(k, Vector(m), p)[0]);
  CHECK(seen.size() == m);
}

TEST_CASE("random draws depend only on (seed, k)") {
  const C c = uniform_singletons<double>(6, 123);
  const auto& rs = std::get<C::RandomSets>(c.kind());
  std::vector<IndexSet> forward;
  for (std::uint64_t k = 0; k < 200; ++k) forward.push_back(C::draw(rs, k));
  for (std::uint64_t k = 200; k-- > 0;) CHECK(C::draw(rs, k) == forward[k]);
  const C other = uniform_singletons<double>(6, 124);
  int differ = 0;
  for (std::uint64_t k = 0; k < 200; ++k) {
    differ += C::draw(std::get<C::RandomSets>(other.kind()), k) != forward[k];
  }
  CHECK(differ > 0);
  for (std::uint64_t k = 0; k < 1000; ++k) {
    const double u = counter_uniform(5, k);
    CHECK(u >= 0);
    CHECK(u < 1);
  }
}

TEST_CASE("random draws follow the atom probabilities") {
  const C c = C::RandomSets{{{{1}, 0.2}, {{2}, 0.5}, {{1, 2}, 0.3}}, 31};
  const auto& rs = std::get<C::RandomSets>(c.kind());
  const int n = 100000;
  int counts[3] = {0, 0, 0};
  for (int k = 0; k < n; ++k) {
    const IndexSet s = C::draw(rs, static_cast<std::uint64_t>(k));
    counts[s.size() == 2 ? 2 : s[0] - 1]++;
  }
  const double p[3] = {0.2, 0.5, 0.3};
  for (int j = 0; j < 3; ++j) {
    const double sigma = std::sqrt(n * p[j] * (1 - p[j]));
    CHECK(std::abs(counts[j] - n * p[j]) <= 5 * sigma);
  }
}

TEST_CASE("empirical well-matchedness") {
  const std::size_t m = 4;
  const Problem p = orthant(m);
  const std::vector<Vector> probes{Vector{1, -1, -1, -1}, Vector{-1, -1, 1, 1}, Vector{1, 1, 1, 1}};

  const WellMatchedReport cyc = empirical_well_matched(C(C::Cyclic{{1, 2, 3, 4}}), p, probes, 2 * m);
  CHECK_FALSE(cyc.any_flagged());
  for (const auto& h : cyc.probes) CHECK(h.hits >= 1);
  CHECK(cyc.verdict() == "no violation found");

  const Vector only_first{1, -1, -1, -1};
  const WellMatchedReport never =
      empirical_well_matched(C(C::Explicit{{{2}, {3, 4}}}), p, {only_first}, 100);
  CHECK(never.any_flagged());
  CHECK(never.probes[0].hits == 0);
  CHECK(never.verdict() != "no violation found");

  // Uniform singletons: hit frequency |I_+(x)|/m within 5 sigma.
  const std::uint64_t N = 1000;
  const WellMatchedReport rnd = empirical_well_matched(uniform_singletons<double>(m, 5), p, probes, N);
  for (std::size_t j = 0; j < probes.size(); ++j) {
    const double q = static_cast<double>(violated_indices(p, probes[j]).size()) / m;
    const double sigma = std::sqrt(N * q * (1 - q));
    CHECK(std::abs(static_cast<double>(rnd.probes[j].hits) - N * q) <= 5 * sigma + 1e-9);
  }
}

TEST_CASE("positivity diagnostic by exact atom sums") {
  const Problem p = two_halfspaces();
  const Vector violates_second{-1, 1};
  const auto uniform = positivity_diagnostic(uniform_singletons<double>(2, 1), p, {violates_second});
  CHECK(uniform[0].probability == 0.5);
  CHECK_FALSE(uniform[0].flagged);

  const auto only_one = positivity_diagnostic(C(C::RandomSets{{{{1}, 1.0}}, 1}), p, {violates_second});
  CHECK(only_one[0].probability == 0);
  CHECK(only_one[0].flagged);

  const auto mixed = positivity_diagnostic(C(C::RandomSets{{{{1, 2}, 0.3}, {{1}, 0.7}}, 1}), p,
                                           {violates_second});
  CHECK(mixed[0].probability == 0.3);
  CHECK_FALSE(mixed[0].flagged);

  CHECK_THROWS_AS(positivity_diagnostic(C(C::Cyclic{{1, 2}}), p, {violates_second}), ConfigError);
}

TEST_CASE("merged-origin pattern follows the schedule") {
  using O = Overrelaxation<double>;
  const O merged(O::MergedDecreasing{std::make_shared<const O>(O::Harmonic{1}),
                                     std::make_shared<const O>(O::SqrtContraction{0.5})});
  const Problem p = abs_and_square();
  const C c = merged_origin_control<double>(merged, 1, 2);
  CHECK(c.next(0, Vector{2, 2}, p) == IndexSet{1});
  CHECK(c.next(1, Vector{2, 2}, p) == IndexSet{1});
  CHECK(c.next(2, Vector{2, 2}, p) == IndexSet{2});
  CHECK(c.next(129, Vector{2, 2}, p) == IndexSet{2});
  CHECK(c.next(130, Vector{2, 2}, p) == IndexSet{1});
  CHECK_THROWS_AS(merged_origin_control<double>(O::harmonic(), 1, 2), ConfigError);
}
