#pragma once

// Seed derivation and portable bounded draws.
//
// std::mt19937_64 is bit-exact across standard libraries but the standard
// distributions are not, so every draw that feeds an artifact goes through the
// helpers below instead of std::uniform_*_distribution.

#include <bit>
#include <cstdint>
#include <random>
#include <string_view>

#include "coimg/uint128.hpp"

namespace coimg {

/// 64-bit FNV-1a over the raw bytes of `text`.
constexpr std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

/// SplitMix64 output function: add the golden-ratio increment, then
/// xor-shift-multiply with 0xBF58476D1CE4E5B9 and 0x94D049BB133111EB.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// class_seed = mix64(global_seed ^ mix64(fnv1a64(class_name))).
/// Depends only on the global seed and the class's own name.
constexpr std::uint64_t derive_class_seed(std::uint64_t global_seed, std::string_view class_name) {
  return mix64(global_seed ^ mix64(fnv1a64(class_name)));
}

using Engine = std::mt19937_64;

/// Uniform integer in [0, bound) by masked rejection. bound must be > 0.
inline u128 draw_below(Engine& engine, u128 bound) {
  const u128 top = bound - 1;
  if (top == 0) return 0;
  const int bits = fits_u64(top) ? 64 - std::countl_zero(low64(top))
                                 : 128 - std::countl_zero(high64(top));
  for (;;) {
    u128 value = engine();
    if (bits > 64) value |= static_cast<u128>(engine()) << 64;
    if (bits < 128) value &= (static_cast<u128>(1) << bits) - 1;
    if (value <= top) return value;
  }
}

/// Uniform double in [0, 1) with 53 random bits.
inline double draw_unit(Engine& engine) {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

}  // namespace coimg
