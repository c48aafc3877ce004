#pragma once

// Seeded random polyhedral instances with a known interior ball, for convergence sweeps.

#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <vector>

#include "feasik/problem.hpp"

namespace feasik {

struct InstanceShape {
  std::size_t min_dim = 2;
  std::size_t max_dim = 8;
  std::size_t min_constraints = 2;
  std::size_t max_constraints = 12;
  double min_radius = 0.1;
  double max_radius = 0.5;
};

struct Instance {
  std::uint64_t id;
  std::shared_ptr<const Problem> problem;
  Vector x0;
  Vector z;  // B(z, 2R) ⊆ C and z ∈ Q
  double R;
};

/// Halfspaces <a_i, x> <= b_i with b_i = <a_i, z> + ||a_i|| (2R + margin_i), stored as affine
/// sublevel sets so both the metric and the subgradient cutters apply. Odd ids use the box
/// z ± 6 as Q, even ids the whole space.
inline Instance random_instance(std::uint64_t seed, std::uint64_t id, InstanceShape shape = {}) {
  std::mt19937_64 rng(seed ^ (0x9e3779b97f4a7c15ULL * (id + 1)));
  std::uniform_int_distribution<std::size_t> dim_dist(shape.min_dim, shape.max_dim);
  std::uniform_int_distribution<std::size_t> m_dist(shape.min_constraints, shape.max_constraints);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> radius(shape.min_radius, shape.max_radius);
  std::uniform_real_distribution<double> scale(0.5, 2.0);
  std::uniform_real_distribution<double> margin(0.0, 1.0);
  std::uniform_real_distribution<double> start(2.0, 5.0);
  std::normal_distribution<double> gauss;

  const std::size_t n = dim_dist(rng);
  const std::size_t m = m_dist(rng);
  auto direction = [&] {
    std::vector<double> v(n);
    double s = 0;
    while (s < 1e-6) {
      s = 0;
      for (double& c : v) {
        c = gauss(rng);
        s += c * c;
      }
    }
    for (double& c : v) c /= std::sqrt(s);
    return v;
  };

  std::vector<double> zc(n);
  for (double& c : zc) c = unit(rng);
  const Vector z(zc);
  const double R = radius(rng);

  std::vector<Constraint<double>> cs;
  cs.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    std::vector<double> a = direction();
    const double len = scale(rng);
    for (double& c : a) c *= len;
    Vector av(std::move(a));
    const double b = dot(av, z) + len * (2 * R + margin(rng));
    cs.emplace_back(Sublevel<double>{ConvexFunction<double>(Affine<double>{av, b}, n)});
  }

  OuterSet<double> outer;
  if (id % 2 == 1) {
    Vector lo = z, hi = z;
    for (std::size_t d = 0; d < n; ++d) {
      lo[d] -= 6;
      hi[d] += 6;
    }
    outer = OuterSet<double>(Box<double>{lo, hi});
  }

  const std::vector<double> e = direction();
  const double dist = start(rng);
  Vector x0 = z;
  for (std::size_t d = 0; d < n; ++d) x0[d] += dist * e[d];

  auto problem = std::make_shared<const Problem>(n, std::move(cs), std::move(outer),
                                                 CertifiedInterior<double>{z, R});
  return {id, std::move(problem), std::move(x0), z, R};
}

}  // namespace feasik
