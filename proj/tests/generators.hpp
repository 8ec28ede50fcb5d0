#pragma once

// Seeded generators for property tests. Every case is reproducible from the
// (suite seed, case index) pair printed on failure.

#include "dirform/dirform.hpp"

#include <random>

namespace dirform::testing {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  std::mt19937_64& rng() { return rng_; }

  double normal() { return normal_(rng_); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }
  std::size_t between(std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_); }

  Vector vector(std::size_t n) {
    Vector v(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = normal();
    return v;
  }

  GraphForm graph(std::size_t lo = 2, std::size_t hi = 30) { return make_random_graph(between(lo, hi), rng_(), 0.15); }

  /// Nonempty subset, sorted, without duplicates.
  std::vector<std::size_t> subset(std::size_t n) {
    std::vector<std::size_t> s;
    for (std::size_t i = 0; i < n; ++i)
      if (uniform(0.0, 1.0) < 0.5) s.push_back(i);
    if (s.empty()) s.push_back(index(n));
    return s;
  }

 private:
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_;
};

inline double max_abs(const Vector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace dirform::testing
