#pragma once

// Sampling helpers shared by the unit tests.

#include <cmath>
#include <random>
#include <vector>

#include "feasik/vector.hpp"

namespace feasik::testing {

inline Vector uniform_point(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> c(n);
  for (double& v : c) v = u(rng);
  return Vector(std::move(c));
}

inline Vector unit_direction(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> g;
  std::vector<double> c(n);
  double s = 0;
  while (s < 1e-12) {
    s = 0;
    for (double& v : c) {
      v = g(rng);
      s += v * v;
    }
  }
  for (double& v : c) v /= std::sqrt(s);
  return Vector(std::move(c));
}

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace feasik::testing
