#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "feasik/error.hpp"

namespace feasik {

/// Constraint index. Pools are indexed from 1, matching I = {1, ..., m}.
using Index = std::size_t;
using IndexSet = std::vector<Index>;

/// Neumaier-compensated accumulator.
template <std::floating_point Real>
class CompensatedSum {
 public:
  void add(Real v) {
    const Real t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      carry_ += (sum_ - t) + v;
    } else {
      carry_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  Real value() const { return sum_ + carry_; }

 private:
  Real sum_ = 0;
  Real carry_ = 0;
};

/// A point of R^n with n >= 1 and finite coordinates.
template <std::floating_point Real>
class BasicVector {
 public:
  using value_type = Real;

  /// Origin of R^dim.
  explicit BasicVector(std::size_t dim) : coords_(dim, Real(0)) {
    if (dim == 0) throw ConfigError("vector dimension must be positive");
  }
  explicit BasicVector(std::vector<Real> coords) : coords_(std::move(coords)) { validate(); }
  BasicVector(std::initializer_list<Real> coords) : coords_(coords) { validate(); }

  std::size_t size() const { return coords_.size(); }
  Real operator[](std::size_t i) const { return coords_[i]; }
  Real& operator[](std::size_t i) { return coords_[i]; }
  std::span<const Real> span() const { return coords_; }
  const std::vector<Real>& coords() const { return coords_; }
  auto begin() const { return coords_.begin(); }
  auto end() const { return coords_.end(); }

  bool all_finite() const {
    for (Real v : coords_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  BasicVector& operator+=(const BasicVector& o) {
    check_dim(o);
    for (std::size_t i = 0; i < size(); ++i) coords_[i] += o.coords_[i];
    return *this;
  }
  BasicVector& operator-=(const BasicVector& o) {
    check_dim(o);
    for (std::size_t i = 0; i < size(); ++i) coords_[i] -= o.coords_[i];
    return *this;
  }
  BasicVector& operator*=(Real s) {
    for (Real& v : coords_) v *= s;
    return *this;
  }

  friend bool operator==(const BasicVector&, const BasicVector&) = default;

  void check_dim(const BasicVector& o) const {
    if (o.size() != size()) {
      throw ConfigError("dimension mismatch: " + std::to_string(size()) + " vs " +
                        std::to_string(o.size()));
    }
  }

 private:
  void validate() const {
    if (coords_.empty()) throw ConfigError("vector dimension must be positive");
    if (!all_finite()) throw ConfigError("vector coordinates must be finite");
  }

  std::vector<Real> coords_;
};

using Vector = BasicVector<double>;

template <std::floating_point Real>
BasicVector<Real> operator+(BasicVector<Real> a, const BasicVector<Real>& b) {
  return a += b;
}
template <std::floating_point Real>
BasicVector<Real> operator-(BasicVector<Real> a, const BasicVector<Real>& b) {
  return a -= b;
}
template <std::floating_point Real>
BasicVector<Real> operator*(Real s, BasicVector<Real> a) {
  return a *= s;
}

template <std::floating_point Real>
Real dot(const BasicVector<Real>& a, const BasicVector<Real>& b) {
  a.check_dim(b);
  Real s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

template <std::floating_point Real>
Real norm_squared(const BasicVector<Real>& a) {
  return dot(a, a);
}

namespace detail {

/// sqrt(sum v_i^2) of a generated sequence. The plain sum is used unless it over- or underflows,
/// in which case the terms are rescaled by the largest magnitude first.
template <std::floating_point Real, class Term>
Real euclidean(std::size_t n, Term term) {
  Real s = 0;
  for (std::size_t i = 0; i < n; ++i) s += term(i) * term(i);
  if (std::isnormal(s) && s < std::numeric_limits<Real>::max()) return std::sqrt(s);
  Real scale = 0;
  for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(term(i)));
  if (scale == 0 || !std::isfinite(scale)) return scale;
  Real t = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Real q = term(i) / scale;
    t += q * q;
  }
  return scale * std::sqrt(t);
}

}  // namespace detail

template <std::floating_point Real>
Real norm(const BasicVector<Real>& a) {
  return detail::euclidean<Real>(a.size(), [&](std::size_t i) { return a[i]; });
}

template <std::floating_point Real>
Real distance(const BasicVector<Real>& a, const BasicVector<Real>& b) {
  a.check_dim(b);
  return detail::euclidean<Real>(a.size(), [&](std::size_t i) { return a[i] - b[i]; });
}

template <std::floating_point To, std::floating_point From>
BasicVector<To> convert(const BasicVector<From>& v) {
  std::vector<To> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<To>(v[i]);
  return BasicVector<To>(std::move(out));
}

}  // namespace feasik
