#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace gradpush {

// Deterministic draw stream backing every generator in the project.
//
// The engine is std::mt19937_64 seeded directly with the given value. The
// bit-to-double mappings are pinned so that a seed fully determines any
// generated artifact, and they are part of the serialization contract:
//
//   uniform01: top 53 bits of one 64-bit output, scaled by 2^-53 -> [0, 1)
//   normal:    Box-Muller on two consecutive uniform01 draws,
//              z = sqrt(-2 ln(1 - u1)) * cos(2 pi u2)
//
// Each normal() consumes exactly two generator outputs and caches nothing.
class DrawStream {
 public:
  explicit DrawStream(std::uint64_t seed) : gen_(seed) {}

  double uniform01() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double normal() {
    const double u1 = uniform01();
    const double u2 = uniform01();
    // 1 - u1 lies in (0, 1], so the log never sees zero.
    return std::sqrt(-2.0 * std::log1p(-u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace gradpush
