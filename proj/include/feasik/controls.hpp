#pragma once

// Control sequences I_k: which constraint indices are processed at iteration k.

#include <algorithm>
#include <concepts>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "feasik/error.hpp"
#include "feasik/operators.hpp"
#include "feasik/problem.hpp"
#include "feasik/schedules.hpp"

namespace feasik {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30U)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27U)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31U);
}

/// Uniform draw in [0, 1) that depends only on (seed, k).
constexpr double counter_uniform(std::uint64_t seed, std::uint64_t k) {
  const std::uint64_t h = mix64(mix64(seed) ^ mix64(k ^ 0x5851f42d4c957f2dULL));
  return static_cast<double>(h >> 11U) * 0x1.0p-53;
}

/// One outcome of a random set-valued control together with its probability.
struct Atom {
  IndexSet set;
  double probability;
};

template <std::floating_point Real>
class Control {
 public:
  /// Singletons {order[k mod s]}.
  struct Cyclic {
    IndexSet order;
  };
  /// blocks[k mod #blocks]; `span` is the declared window s with I = ⋃_{k=n}^{n+s-1} I_k.
  struct Intermittent {
    std::vector<IndexSet> blocks;
    std::size_t span;
  };
  /// Arbitrary nonadaptive schedule k -> I_k.
  struct Repetitive {
    std::function<IndexSet(std::uint64_t)> schedule;
    std::size_t max_card;
    std::string pattern;
    std::vector<std::uint64_t> params;  // pattern arguments, for serialization
  };
  /// argmax_i d(x, C_i).
  struct RemotestSet {};
  /// argmax_i ||T_i(x) - x||.
  struct MaxDisplacement {};
  /// argmax_i f_i^+(x).
  struct MaxViolation {};
  /// I_k i.i.d. over the atoms, drawn from counter_uniform(seed, k).
  struct RandomSets {
    std::vector<Atom> atoms;
    std::uint64_t seed;
  };
  /// sets[k mod #sets].
  struct Explicit {
    std::vector<IndexSet> sets;
  };
  using Kind = std::variant<Cyclic, Intermittent, Repetitive, RemotestSet, MaxDisplacement,
                            MaxViolation, RandomSets, Explicit>;

  Control(Kind kind) : kind_(std::move(kind)) { validate_shape(); }  // NOLINT
  template <class K>
    requires(!std::same_as<std::decay_t<K>, Kind> && std::constructible_from<Kind, K>)
  Control(K&& kind) : Control(Kind(std::forward<K>(kind))) {}  // NOLINT

  const Kind& kind() const { return kind_; }

  std::string name() const {
    return std::visit(
        [](const auto& c) -> std::string {
          using C = std::decay_t<decltype(c)>;
          if constexpr (std::is_same_v<C, Cyclic>) return "cyclic";
          if constexpr (std::is_same_v<C, Intermittent>) return "intermittent";
          if constexpr (std::is_same_v<C, Repetitive>) return "repetitive";
          if constexpr (std::is_same_v<C, RemotestSet>) return "remotest";
          if constexpr (std::is_same_v<C, MaxDisplacement>) return "max_displacement";
          if constexpr (std::is_same_v<C, MaxViolation>) return "max_violation";
          if constexpr (std::is_same_v<C, RandomSets>) return "random";
          if constexpr (std::is_same_v<C, Explicit>) return "explicit";
        },
        kind_);
  }

  bool is_adaptive() const {
    return std::holds_alternative<RemotestSet>(kind_) ||
           std::holds_alternative<MaxDisplacement>(kind_) ||
           std::holds_alternative<MaxViolation>(kind_);
  }

  /// M = sup_k #I_k.
  std::size_t max_card() const {
    auto largest = [](const std::vector<IndexSet>& sets) {
      std::size_t n = 0;
      for (const auto& s : sets) n = std::max(n, s.size());
      return n;
    };
    return std::visit(
        [&](const auto& c) -> std::size_t {
          using C = std::decay_t<decltype(c)>;
          if constexpr (std::is_same_v<C, Intermittent>) {
            return largest(c.blocks);
          } else if constexpr (std::is_same_v<C, Explicit>) {
            return largest(c.sets);
          } else if constexpr (std::is_same_v<C, Repetitive>) {
            return c.max_card;
          } else if constexpr (std::is_same_v<C, RandomSets>) {
            std::size_t n = 0;
            for (const auto& a : c.atoms) n = std::max(n, a.set.size());
            return n;
          } else {
            return 1;
          }
        },
        kind_);
  }

  /// Checks indices against the pool; maximal controls need a finite pool.
  void validate(const BasicProblem<Real>& p) const {
    if (is_adaptive() && !p.is_finite()) {
      throw ConfigError("maximal control requires finite pool");
    }
    auto check_all = [&](const IndexSet& s) {
      for (Index i : s) p.check_index(i);
    };
    std::visit(
        [&](const auto& c) {
          using C = std::decay_t<decltype(c)>;
          if constexpr (std::is_same_v<C, Cyclic>) {
            check_all(c.order);
          } else if constexpr (std::is_same_v<C, Intermittent>) {
            for (const auto& b : c.blocks) check_all(b);
          } else if constexpr (std::is_same_v<C, Explicit>) {
            for (const auto& b : c.sets) check_all(b);
          } else if constexpr (std::is_same_v<C, RandomSets>) {
            for (const auto& a : c.atoms) check_all(a.set);
          } else if constexpr (std::is_same_v<C, MaxViolation>) {
            for (Index i : p.all_indices()) {
              if (!p.visit(i, [](const Constraint<Real>& con) { return con.is_sublevel(); })) {
                throw ConfigError("maximal violation control requires sublevel constraints");
              }
            }
          } else if constexpr (std::is_same_v<C, RemotestSet>) {
            const BasicVector<Real> origin(p.dim());
            for (Index i : p.all_indices()) {
              p.visit(i, [&](const Constraint<Real>& con) {
                if (!con.distance_to(origin)) {
                  throw ConfigError("remotest set control needs closed-form distances");
                }
              });
            }
          }
        },
        kind_);
  }

  /// I_k(x), sorted ascending and nonempty.
  IndexSet next(std::uint64_t k, const BasicVector<Real>& x, const BasicProblem<Real>& p) const {
    IndexSet out = std::visit(
        [&](const auto& c) -> IndexSet {
          using C = std::decay_t<decltype(c)>;
          if constexpr (std::is_same_v<C, Cyclic>) {
            return {c.order[k % c.order.size()]};
          } else if constexpr (std::is_same_v<C, Intermittent>) {
            return c.blocks[k % c.blocks.size()];
          } else if constexpr (std::is_same_v<C, Explicit>) {
            return c.sets[k % c.sets.size()];
          } else if constexpr (std::is_same_v<C, Repetitive>) {
            return c.schedule(k);
          } else if constexpr (std::is_same_v<C, RandomSets>) {
            return draw(c, k);
          } else {
            if (!p.is_finite()) throw ConfigError("maximal control requires finite pool");
            return {argmax(p, [&](const Constraint<Real>& con) -> Real {
              if constexpr (std::is_same_v<C, RemotestSet>) {
                const auto d = con.distance_to(x);
                if (!d) throw ConfigError("remotest set control needs closed-form distances");
                return *d;
              } else if constexpr (std::is_same_v<C, MaxDisplacement>) {
                return apply_cutter(con, x).displacement_norm;
              } else {
                const auto* f = con.function();
                if (!f) throw ConfigError("maximal violation control requires sublevel constraints");
                return std::max(Real(0), f->value(x));
              }
            })};
          }
        },
        kind_);
    if (out.empty()) throw ConfigError("control emitted an empty index set at k=" + std::to_string(k));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    if (out.size() > max_card()) throw ConfigError("control emitted more than max_card indices");
    return out;
  }

  /// Atom drawn at iteration k.
  static IndexSet draw(const RandomSets& c, std::uint64_t k) {
    const double u = counter_uniform(c.seed, k);
    double cumulative = 0;
    std::size_t last_positive = 0;
    for (std::size_t j = 0; j < c.atoms.size(); ++j) {
      if (c.atoms[j].probability <= 0) continue;
      last_positive = j;
      cumulative += c.atoms[j].probability;
      if (u < cumulative) return c.atoms[j].set;
    }
    return c.atoms[last_positive].set;
  }

 private:
  template <class Score>
  static Index argmax(const BasicProblem<Real>& p, Score score) {
    const std::size_t m = *p.cardinality();
    Index best = 1;
    Real best_score = p.visit(1, score);
    for (Index i = 2; i <= m; ++i) {
      const Real s = p.visit(i, score);
      if (s > best_score) {
        best = i;
        best_score = s;
      }
    }
    return best;
  }

  void validate_shape() const {
    auto nonempty_sets = [](const std::vector<IndexSet>& sets, const char* what) {
      if (sets.empty()) throw ConfigError(std::string(what) + ": needs at least one set");
      for (const auto& s : sets) {
        if (s.empty()) throw ConfigError(std::string(what) + ": index sets must be nonempty");
      }
    };
    std::visit(
        [&](const auto& c) {
          using C = std::decay_t<decltype(c)>;
          if constexpr (std::is_same_v<C, Cyclic>) {
            if (c.order.empty()) throw ConfigError("cyclic control needs a nonempty order");
          } else if constexpr (std::is_same_v<C, Intermittent>) {
            nonempty_sets(c.blocks, "intermittent control");
            if (c.span == 0) throw ConfigError("intermittent control: span must be positive");
          } else if constexpr (std::is_same_v<C, Explicit>) {
            nonempty_sets(c.sets, "explicit control");
          } else if constexpr (std::is_same_v<C, Repetitive>) {
            if (!c.schedule || c.max_card == 0) {
              throw ConfigError("repetitive control needs a schedule and max_card");
            }
          } else if constexpr (std::is_same_v<C, RandomSets>) {
            if (c.atoms.empty()) throw ConfigError("random control needs atoms");
            double total = 0;
            for (const auto& a : c.atoms) {
              if (a.set.empty()) throw ConfigError("random control: atoms must be nonempty");
              if (!(a.probability >= 0)) throw ConfigError("random control: negative probability");
              total += a.probability;
            }
            if (std::abs(total - 1.0) > 1e-12) {
              throw ConfigError("random control: probabilities must sum to 1");
            }
          }
        },
        kind_);
  }

  Kind kind_;
};

// ---------------------------------------------------------------------------
// Named nonadaptive patterns.
// ---------------------------------------------------------------------------

/// Cyclic over 1..m.
template <std::floating_point Real>
Control<Real> cyclic_control(std::size_t m) {
  IndexSet order(m);
  std::iota(order.begin(), order.end(), Index{1});
  return typename Control<Real>::Cyclic{order};
}

/// Uniform over the singletons {1}, ..., {m}.
template <std::floating_point Real>
Control<Real> uniform_singletons(std::size_t m, std::uint64_t seed) {
  std::vector<Atom> atoms;
  for (Index i = 1; i <= m; ++i) atoms.push_back({{i}, 1.0 / static_cast<double>(m)});
  // 1/m summed m times can miss 1 by a few ulps; renormalize the last atom.
  double head = 0;
  for (std::size_t j = 0; j + 1 < atoms.size(); ++j) head += atoms[j].probability;
  atoms.back().probability = 1.0 - head;
  return typename Control<Real>::RandomSets{atoms, seed};
}

/// Round j is a seeded random permutation of 1..m, one index per iteration.
template <std::floating_point Real>
Control<Real> shuffled_rounds(std::size_t m, std::uint64_t seed) {
  auto schedule = [m, seed](std::uint64_t k) -> IndexSet {
    const std::uint64_t round = k / m;
    IndexSet perm(m);
    std::iota(perm.begin(), perm.end(), Index{1});
    std::mt19937_64 rng(mix64(seed) ^ mix64(round));
    for (std::size_t j = m; j > 1; --j) {
      std::uniform_int_distribution<std::size_t> pick(0, j - 1);
      std::swap(perm[j - 1], perm[pick(rng)]);
    }
    return {perm[k % m]};
  };
  return typename Control<Real>::Repetitive{schedule, 1, "shuffled_rounds", {m, seed}};
}

/// Round j = 1, 2, ... visits 1..m with every index repeated j times in a row, so the gap
/// between visits of an index grows without bound (repetitive but not intermittent).
template <std::floating_point Real>
Control<Real> expanding_control(std::size_t m) {
  auto schedule = [m](std::uint64_t k) -> IndexSet {
    // Round j occupies positions [m j (j-1)/2, m j (j+1)/2).
    const double guess =
        std::floor((std::sqrt(8.0 * static_cast<double>(k) / static_cast<double>(m) + 1.0) - 1.0) / 2.0);
    std::uint64_t j = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(guess));
    while (j > 1 && m * j * (j - 1) / 2 > k) --j;
    while (m * j * (j + 1) / 2 <= k) ++j;
    const std::uint64_t start = m * j * (j - 1) / 2;
    return {static_cast<Index>((k - start) / j) + 1};
  };
  return typename Control<Real>::Repetitive{schedule, 1, "expanding", {m}};
}

/// Index a_index at positions holding an a-element of a merged schedule, b_index at b-elements.
template <std::floating_point Real>
Control<Real> merged_origin_control(Overrelaxation<Real> merged, Index a_index, Index b_index) {
  (void)merged.merged_origin(0);  // throws unless merged_decreasing
  auto schedule = [merged, a_index, b_index](std::uint64_t k) -> IndexSet {
    return {merged.merged_origin(k).from_b ? b_index : a_index};
  };
  return typename Control<Real>::Repetitive{schedule, 1, "merged_origin", {a_index, b_index}};
}

// ---------------------------------------------------------------------------
// Diagnostics.
// ---------------------------------------------------------------------------

struct ProbeHits {
  std::size_t probe;
  std::size_t violated;    // #I_+(x) within the window
  std::uint64_t hits;      // #{k < N : I_k(x) ∩ I_+(x) ≠ ∅}
  bool flagged;            // zero hits: necessary condition failed
};

struct WellMatchedReport {
  std::uint64_t horizon;
  std::vector<ProbeHits> probes;
  bool any_flagged() const {
    return std::any_of(probes.begin(), probes.end(), [](const ProbeHits& p) { return p.flagged; });
  }
  /// A finite horizon can only refute, never prove, well-matchedness.
  std::string verdict() const {
    return any_flagged() ? "necessary condition failed: some probe was never corrected"
                         : "no violation found";
  }
};

inline bool intersects(const IndexSet& a, const IndexSet& b) {
  for (Index i : a) {
    if (std::binary_search(b.begin(), b.end(), i)) return true;
  }
  return false;
}

/// Finite-horizon surrogate of well-matchedness. For adaptive controls I_k is evaluated at the
/// probe itself.
template <std::floating_point Real>
WellMatchedReport empirical_well_matched(const Control<Real>& c, const BasicProblem<Real>& p,
                                         const std::vector<BasicVector<Real>>& probes,
                                         std::uint64_t horizon, std::span<const Index> window) {
  if (horizon == 0) throw ConfigError("horizon must be at least 1");
  WellMatchedReport report{horizon, {}};
  for (std::size_t j = 0; j < probes.size(); ++j) {
    const IndexSet violated = violated_indices(p, probes[j], window);
    if (violated.empty()) throw PreconditionError("probe " + std::to_string(j) + " is feasible");
    std::uint64_t hits = 0;
    for (std::uint64_t k = 0; k < horizon; ++k) {
      if (intersects(c.next(k, probes[j], p), violated)) ++hits;
    }
    report.probes.push_back({j, violated.size(), hits, hits == 0});
  }
  return report;
}

struct ProbeProbability {
  std::size_t probe;
  double probability;  // P(I_k ∩ I_+(x) ≠ ∅)
  bool flagged;        // probability == 0
};

/// Exact atom summation of P(I_k ∩ I_+(x) ≠ ∅) for each probe.
template <std::floating_point Real>
std::vector<ProbeProbability> positivity_diagnostic(const Control<Real>& c,
                                                    const BasicProblem<Real>& p,
                                                    const std::vector<BasicVector<Real>>& probes,
                                                    std::span<const Index> window) {
  const auto* random = std::get_if<typename Control<Real>::RandomSets>(&c.kind());
  if (!random) throw ConfigError("positivity diagnostic requires a random control");
  std::vector<ProbeProbability> out;
  for (std::size_t j = 0; j < probes.size(); ++j) {
    const IndexSet violated = violated_indices(p, probes[j], window);
    double total = 0;
    for (const auto& atom : random->atoms) {
      IndexSet sorted = atom.set;
      std::sort(sorted.begin(), sorted.end());
      if (intersects(sorted, violated)) total += atom.probability;
    }
    out.push_back({j, total, !(total > 0)});
  }
  return out;
}

/// Window defaults to the whole finite pool.
template <std::floating_point Real>
WellMatchedReport empirical_well_matched(const Control<Real>& c, const BasicProblem<Real>& p,
                                         const std::vector<BasicVector<Real>>& probes,
                                         std::uint64_t horizon) {
  const IndexSet all = p.all_indices();
  return empirical_well_matched(c, p, probes, horizon, std::span<const Index>(all));
}

template <std::floating_point Real>
std::vector<ProbeProbability> positivity_diagnostic(const Control<Real>& c,
                                                    const BasicProblem<Real>& p,
                                                    const std::vector<BasicVector<Real>>& probes) {
  const IndexSet all = p.all_indices();
  return positivity_diagnostic(c, p, probes, std::span<const Index>(all));
}

/// Structural check that ⋃_{k=n}^{n+s-1} I_k ⊇ universe for every n < n_max.
template <std::floating_point Real>
bool covers_every_window(const Control<Real>& c, const BasicProblem<Real>& p,
                         const BasicVector<Real>& x, const IndexSet& universe, std::size_t s,
                         std::uint64_t n_max) {
  for (std::uint64_t n = 0; n < n_max; ++n) {
    IndexSet seen;
    for (std::uint64_t k = n; k < n + s; ++k) {
      const IndexSet ik = c.next(k, x, p);
      seen.insert(seen.end(), ik.begin(), ik.end());
    }
    std::sort(seen.begin(), seen.end());
    for (Index i : universe) {
      if (!std::binary_search(seen.begin(), seen.end(), i)) return false;
    }
  }
  return true;
}

}  // namespace feasik
