#pragma once

#include <cstdint>
#include <random>

#include "stab360/sphere.hpp"

namespace stab360 {

/// Mixes a master seed with stream indices (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0);

/// Seeded generator with platform-independent distributions.
///
/// std::mt19937_64's raw sequence is fixed by the standard; the distribution
/// adaptors here are implemented locally so streams are bit-identical across
/// standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  double uniform();                      // [0, 1)
  double uniform(double lo, double hi);  // [lo, hi)
  int uniform_int(int n);                // [0, n)
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  Vec3 unit_vector();
  Vec3 in_ball(double radius);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace stab360
