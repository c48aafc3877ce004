#pragma once

// Parameter sequences of the overrelaxed iteration: relaxations alpha_k, overrelaxations r_k,
// the functionals phi_i, the weights lambda_{i,k} and the correction counter [k].

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "feasik/error.hpp"
#include "feasik/operators.hpp"
#include "feasik/problem.hpp"

namespace feasik {

// ---------------------------------------------------------------------------
// Relaxation alpha_k ∈ (0, 2].
// ---------------------------------------------------------------------------

template <std::floating_point Real>
class Relaxation {
 public:
  struct Constant {
    Real alpha;
  };
  /// values[k] for k < size, then the last value.
  struct List {
    std::vector<Real> values;
  };
  using Kind = std::variant<Constant, List>;

  Relaxation(Kind kind) : kind_(std::move(kind)) {  // NOLINT(google-explicit-constructor)
    std::visit(
        [](const auto& s) {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, Constant>) {
            check(s.alpha);
          } else {
            if (s.values.empty()) throw ConfigError("relaxation list must not be empty");
            for (Real a : s.values) check(a);
          }
        },
        kind_);
  }

  static Relaxation constant(Real alpha) { return Relaxation(Constant{alpha}); }

  const Kind& kind() const { return kind_; }

  Real value(std::uint64_t k) const {
    return std::visit(
        [&](const auto& s) -> Real {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, Constant>) {
            return s.alpha;
          } else {
            return s.values[std::min<std::uint64_t>(k, s.values.size() - 1)];
          }
        },
        kind_);
  }

  /// Smallest emitted value; a positive lower bound on alpha_k.
  Real lower_bound() const {
    return std::visit(
        [](const auto& s) -> Real {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, Constant>) {
            return s.alpha;
          } else {
            return *std::min_element(s.values.begin(), s.values.end());
          }
        },
        kind_);
  }

 private:
  static void check(Real a) {
    if (!(a > 0 && a <= 2)) throw ConfigError("relaxation outside (0,2]");
  }

  Kind kind_;
};

// ---------------------------------------------------------------------------
// Overrelaxation r_k > 0.
// ---------------------------------------------------------------------------

/// b_{k+1} = b_k / ((2 sqrt 2 / sqrt b_k) + 4)^2 evaluated in binary64 exactly as written.
inline double sqrt_contraction_next(double b) {
  const double d = (2.0 * std::sqrt(2.0) / std::sqrt(b)) + 4.0;
  return b / (d * d);
}

template <std::floating_point Real>
class Overrelaxation {
 public:
  struct Constant {
    Real r;
  };
  /// scale / (k + 1).
  struct Harmonic {
    Real scale = 1;
  };
  /// first * ratio^k.
  struct Geometric {
    Real first;
    Real ratio;
  };
  /// values[k] for k < size, then the last value.
  struct ExplicitList {
    std::vector<Real> values;
  };
  /// b_0 = b0 and b_{k+1} = b_k / ((2 sqrt 2 / sqrt b_k) + 4)^2, in binary64.
  struct SqrtContraction {
    double b0 = 0.5;
  };
  /// r_k = even(k) for even k and odd(k) for odd k; both indexed by k itself.
  struct Interleaved {
    std::shared_ptr<const Overrelaxation> even;
    std::shared_ptr<const Overrelaxation> odd;
  };
  /// All elements of a and b sorted in decreasing order; on ties the a-element comes first.
  struct MergedDecreasing {
    std::shared_ptr<const Overrelaxation> a;
    std::shared_ptr<const Overrelaxation> b;
  };
  using Kind = std::variant<Constant, Harmonic, Geometric, ExplicitList, SqrtContraction,
                            Interleaved, MergedDecreasing>;

  /// Where a merged position came from.
  struct Origin {
    bool from_b;
    std::uint64_t sub_index;
    Real value;
  };

  Overrelaxation(Kind kind)  // NOLINT(google-explicit-constructor)
      : kind_(std::move(kind)), cache_(std::make_shared<Cache>()) {
    validate();
  }

  static Overrelaxation harmonic(Real scale = 1) { return Overrelaxation(Harmonic{scale}); }
  static Overrelaxation constant(Real r) { return Overrelaxation(Constant{r}); }

  const Kind& kind() const { return kind_; }

  Real value(std::uint64_t k) const {
    return std::visit(
        [&](const auto& s) -> Real {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, Constant>) {
            return s.r;
          } else if constexpr (std::is_same_v<S, Harmonic>) {
            return s.scale / (static_cast<Real>(k) + 1);
          } else if constexpr (std::is_same_v<S, Geometric>) {
            return s.first * int_power(s.ratio, k);
          } else if constexpr (std::is_same_v<S, ExplicitList>) {
            return s.values[std::min<std::uint64_t>(k, s.values.size() - 1)];
          } else if constexpr (std::is_same_v<S, SqrtContraction>) {
            return static_cast<Real>(contraction_value(s.b0, k));
          } else if constexpr (std::is_same_v<S, Interleaved>) {
            return (k % 2 == 0 ? s.even : s.odd)->value(k);
          } else {
            return merged_origin(k).value;
          }
        },
        kind_);
  }

  /// Source of position k of a MergedDecreasing schedule.
  Origin merged_origin(std::uint64_t k) const {
    const auto* m = std::get_if<MergedDecreasing>(&kind_);
    if (!m) throw ConfigError("merged_origin requires a merged_decreasing schedule");
    std::lock_guard<std::mutex> lock(cache_->mutex);
    auto& merged = cache_->merged;
    while (merged.size() <= k) {
      const Real va = m->a->value(cache_->next_a);
      const Real vb = m->b->value(cache_->next_b);
      if (va >= vb) {
        merged.push_back({false, cache_->next_a++, va});
      } else {
        merged.push_back({true, cache_->next_b++, vb});
      }
    }
    return merged[k];
  }

  /// Declared: sum_k r_k = ∞ (with alpha_k bounded away from 0 this gives sum alpha_k r_k = ∞).
  bool divergent_sum() const {
    return std::visit(
        [](const auto& s) -> bool {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, Constant> || std::is_same_v<S, Harmonic> ||
                        std::is_same_v<S, ExplicitList>) {
            return true;
          } else if constexpr (std::is_same_v<S, Geometric>) {
            return s.ratio >= 1;
          } else if constexpr (std::is_same_v<S, SqrtContraction>) {
            return false;
          } else if constexpr (std::is_same_v<S, Interleaved>) {
            return s.even->divergent_sum() || s.odd->divergent_sum();
          } else {
            return s.a->divergent_sum() || s.b->divergent_sum();
          }
        },
        kind_);
  }

  /// Declared: r_k -> 0.
  bool vanishing() const {
    return std::visit(
        [](const auto& s) -> bool {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, Constant> || std::is_same_v<S, ExplicitList>) {
            return false;
          } else if constexpr (std::is_same_v<S, Harmonic> || std::is_same_v<S, SqrtContraction>) {
            return true;
          } else if constexpr (std::is_same_v<S, Geometric>) {
            return s.ratio < 1;
          } else if constexpr (std::is_same_v<S, Interleaved>) {
            return s.even->vanishing() && s.odd->vanishing();
          } else {
            return s.a->vanishing() && s.b->vanishing();
          }
        },
        kind_);
  }

 private:
  struct Cache {
    std::mutex mutex;
    std::vector<double> contraction;
    std::vector<Origin> merged;
    std::uint64_t next_a = 0;
    std::uint64_t next_b = 0;
  };

  static Real int_power(Real base, std::uint64_t e) {
    Real result = 1;
    while (e != 0) {
      if (e & 1U) result *= base;
      base *= base;
      e >>= 1U;
    }
    return result;
  }

  double contraction_value(double b0, std::uint64_t k) const {
    std::lock_guard<std::mutex> lock(cache_->mutex);
    auto& seq = cache_->contraction;
    if (seq.empty()) seq.push_back(b0);
    while (seq.size() <= k) seq.push_back(sqrt_contraction_next(seq.back()));
    return seq[k];
  }

  void validate() const {
    std::visit(
        [](const auto& s) {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, Constant>) {
            if (!(s.r > 0) || !std::isfinite(s.r)) throw ConfigError("overrelaxation must be positive");
          } else if constexpr (std::is_same_v<S, Harmonic>) {
            if (!(s.scale > 0) || !std::isfinite(s.scale)) {
              throw ConfigError("harmonic scale must be positive");
            }
          } else if constexpr (std::is_same_v<S, Geometric>) {
            if (!(s.first > 0) || !(s.ratio > 0) || !std::isfinite(s.first) ||
                !std::isfinite(s.ratio)) {
              throw ConfigError("geometric schedule needs positive first value and ratio");
            }
          } else if constexpr (std::is_same_v<S, ExplicitList>) {
            if (s.values.empty()) throw ConfigError("overrelaxation list must not be empty");
            for (Real r : s.values) {
              if (!(r > 0) || !std::isfinite(r)) throw ConfigError("overrelaxation must be positive");
            }
          } else if constexpr (std::is_same_v<S, SqrtContraction>) {
            if (!(s.b0 > 0) || !std::isfinite(s.b0)) throw ConfigError("b0 must be positive");
          } else if constexpr (std::is_same_v<S, Interleaved>) {
            if (!s.even || !s.odd) throw ConfigError("interleaved schedule needs both parts");
          } else {
            if (!s.a || !s.b) throw ConfigError("merged schedule needs both sequences");
          }
        },
        kind_);
  }

  Kind kind_;
  std::shared_ptr<Cache> cache_;
};

// ---------------------------------------------------------------------------
// phi_i(x) ∈ (0, ∞).
// ---------------------------------------------------------------------------

enum class PhiKind { One, SubgradNorm, Custom };

template <std::floating_point Real>
class Phi {
 public:
  using Function = std::function<Real(Index, const BasicVector<Real>&)>;

  Phi(PhiKind kind = PhiKind::One) : kind_(kind) {  // NOLINT(google-explicit-constructor)
    if (kind == PhiKind::Custom) throw ConfigError("custom phi needs a function and bounds");
  }
  /// User functional with declared bounds delta <= phi <= Delta, checked on every evaluation.
  Phi(Function f, Real delta, Real Delta)
      : kind_(PhiKind::Custom), custom_(std::move(f)), delta_(delta), Delta_(Delta) {
    if (!custom_ || !(delta > 0) || !(Delta >= delta)) {
      throw ConfigError("custom phi needs a function and bounds 0 < delta <= Delta");
    }
  }

  PhiKind kind() const { return kind_; }

  /// phi_i(x). SubgradNorm is ||g_i(x)|| when f_i(x) > 0 and 1 otherwise.
  Real evaluate(Index i, const Constraint<Real>& c, const CutterEval<Real>& eval,
                const BasicVector<Real>& x) const {
    switch (kind_) {
      case PhiKind::One:
        return 1;
      case PhiKind::SubgradNorm:
        if (!c.is_sublevel()) {
          throw ConfigError("phi = subgrad_norm requires sublevel constraints (index " +
                            std::to_string(i) + ")");
        }
        return eval.residual > 0 ? *eval.subgrad_norm : Real(1);
      case PhiKind::Custom: {
        const Real v = custom_(i, x);
        if (!(v >= delta_ && v <= Delta_)) {
          throw NumericalError("custom phi left its declared bounds at index " + std::to_string(i));
        }
        return v;
      }
    }
    return 1;
  }

 private:
  PhiKind kind_;
  Function custom_;
  Real delta_ = 1;
  Real Delta_ = 1;
};

// ---------------------------------------------------------------------------
// Weights lambda_{i,k}(x).
// ---------------------------------------------------------------------------

enum class WeightKind { UniformOverActive, UniformOverViolated, ExplicitTable };

template <std::floating_point Real>
class WeightRule {
 public:
  WeightRule(WeightKind kind = WeightKind::UniformOverActive)  // NOLINT
      : kind_(kind) {
    if (kind == WeightKind::ExplicitTable) throw ConfigError("explicit weights need a table");
  }
  /// Positive weight per index (table[i - 1] for index i), renormalized over I_k.
  explicit WeightRule(std::vector<Real> table)
      : kind_(WeightKind::ExplicitTable), table_(std::move(table)) {
    if (table_.empty()) throw ConfigError("weight table must not be empty");
    for (Real w : table_) {
      if (!(w > 0) || !std::isfinite(w)) throw ConfigError("weights must be positive");
    }
  }

  WeightKind kind() const { return kind_; }
  const std::vector<Real>& table() const { return table_; }

  /// lambda_{i,k} for each i of the active set; violated[j] flags active[j] ∈ I_+(x).
  std::vector<Real> weights(const IndexSet& active, const std::vector<bool>& violated) const {
    const std::size_t n = active.size();
    std::vector<Real> w(n, Real(0));
    if (n == 0) return w;
    switch (kind_) {
      case WeightKind::UniformOverActive:
        std::fill(w.begin(), w.end(), Real(1) / static_cast<Real>(n));
        break;
      case WeightKind::UniformOverViolated: {
        const auto nv = static_cast<std::size_t>(std::count(violated.begin(), violated.end(), true));
        if (nv == 0) {
          std::fill(w.begin(), w.end(), Real(1) / static_cast<Real>(n));
        } else {
          for (std::size_t j = 0; j < n; ++j) w[j] = violated[j] ? Real(1) / static_cast<Real>(nv) : 0;
        }
        break;
      }
      case WeightKind::ExplicitTable: {
        CompensatedSum<Real> total;
        for (std::size_t j = 0; j < n; ++j) total.add(lookup(active[j]));
        for (std::size_t j = 0; j < n; ++j) w[j] = lookup(active[j]) / total.value();
        break;
      }
    }
    return w;
  }

  /// lambda with lambda_{i,k}(x) >= lambda for violated active indices when #I_k <= max_card.
  Real floor(std::size_t max_card) const {
    if (max_card == 0) throw ConfigError("max_card must be positive");
    switch (kind_) {
      case WeightKind::UniformOverActive:
      case WeightKind::UniformOverViolated:
        return Real(1) / static_cast<Real>(max_card);
      case WeightKind::ExplicitTable: {
        std::vector<Real> sorted = table_;
        std::sort(sorted.begin(), sorted.end(), std::greater<>());
        Real top = 0;
        for (std::size_t j = 0; j < std::min(max_card, sorted.size()); ++j) top += sorted[j];
        return sorted.back() / top;
      }
    }
    return 0;
  }

 private:
  Real lookup(Index i) const {
    if (i == 0 || i > table_.size()) {
      throw IndexError("no weight for index " + std::to_string(i));
    }
    return table_[i - 1];
  }

  WeightKind kind_;
  std::vector<Real> table_;
};

// ---------------------------------------------------------------------------
// Correction counter [k].
// ---------------------------------------------------------------------------

enum class CounterMode { Bracketed, Raw };

/// Bracketed: number of earlier steps that applied a correction. Raw: the iteration index k.
class CorrectionCounter {
 public:
  explicit CorrectionCounter(CounterMode mode = CounterMode::Bracketed) : mode_(mode) {}

  CounterMode mode() const { return mode_; }
  std::uint64_t value() const { return count_; }

  /// Advance past one step. `corrected`: I_k^+(x_k) nonempty and a nonzero step was applied.
  void update(bool corrected) {
    if (mode_ == CounterMode::Raw || corrected) ++count_;
  }

 private:
  CounterMode mode_;
  std::uint64_t count_ = 0;
};

/// beta = (r/phi + d)/d for d > 0 and 0 otherwise.
template <std::floating_point Real>
Real beta(Real r, Real phi_val, Real displacement) {
  if (displacement == 0) return 0;
  return (r / phi_val + displacement) / displacement;
}

}  // namespace feasik
