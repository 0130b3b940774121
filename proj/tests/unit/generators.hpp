#pragma once

#include "mswave/types.hpp"

#include <cstdint>
#include <random>

namespace mswave::testing {

// Small seeded generators for the property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  double normal() { return std::normal_distribution<double>()(rng_); }

  Vector vector(int n) {
    Vector v(n);
    for (int i = 0; i < n; ++i) v(i) = normal();
    return v;
  }

  Point point(int dim, double lo = 0.0, double hi = 1.0) {
    Point p(dim);
    for (int j = 0; j < dim; ++j) p(j) = uniform(lo, hi);
    return p;
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

}  // namespace mswave::testing
