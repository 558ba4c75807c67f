#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include "promptmotion/hashing.hpp"

namespace promptmotion {

// Seeded generator with a portable output stream (splitmix64 + Box-Muller),
// so seeded runs are bit-identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() noexcept { return splitmix64(state_); }

  double uniform() noexcept { return to_unit_interval(next_u64()); }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  double normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  // Independent child stream, e.g. one per training step or sample.
  Rng fork(std::uint64_t salt) const noexcept {
    std::uint64_t s = state_ ^ (salt * 0xd1b54a32d192ed03ULL);
    return Rng(splitmix64(s));
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace promptmotion
