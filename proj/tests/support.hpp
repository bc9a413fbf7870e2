#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>

#include "ddcd/matrix.hpp"

namespace testing {

inline ddcd::Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed, double lo = -1.0,
                                  double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  ddcd::Matrix m(r, c);
  for (double& v : m.values()) v = u(rng);
  return m;
}

// Strictly upper-triangular weights relabelled by a random permutation.
inline ddcd::Matrix random_dag(std::size_t d, double p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::bernoulli_distribution coin(p);
  std::vector<std::size_t> perm(d);
  for (std::size_t i = 0; i < d; ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), rng);
  ddcd::Matrix W(d, d);
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = a + 1; b < d; ++b)
      if (coin(rng)) W(perm[a], perm[b]) = u(rng);
  return W;
}

// Central difference of f along entry `i` of `x`.
inline double central_diff(const std::function<double()>& f, double& x, double step) {
  const double keep = x;
  x = keep + step;
  const double up = f();
  x = keep - step;
  const double down = f();
  x = keep;
  return (up - down) / (2.0 * step);
}

inline double rel_err(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

}  // namespace testing
