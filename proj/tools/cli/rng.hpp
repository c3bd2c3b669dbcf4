#pragma once

// Seeded sampling with results that do not depend on the standard library's
// distribution implementations (those differ between vendors).

#include "cgeo/linalg.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace cgeo::cli {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  // 53 random bits in [0, 1)
  double uniform() { return double(eng_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    // Box-Muller, one value per call
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  Vec normal_vec(int d) {
    Vec v(d);
    for (int i = 0; i < d; ++i) v(i) = normal();
    return v;
  }

  // Uniform in the Euclidean ball of the given radius.
  Vec in_ball(int d, double radius) {
    Vec v = normal_vec(d);
    while (v.norm() == 0.0) v = normal_vec(d);
    return v.normalized() * radius * std::pow(uniform(), 1.0 / d);
  }

  std::uint64_t next() { return eng_(); }

 private:
  std::mt19937_64 eng_;
};

}  // namespace cgeo::cli
