#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>

#include "coimg/error.hpp"

namespace coimg {

/// Exact count / rank type. Large enough for C(2064,3)-scale spaces with a
/// wide margin; anything beyond is reported as Overflow, never wrapped.
using u128 = unsigned __int128;

inline constexpr u128 kU128Max = ~static_cast<u128>(0);

inline std::string to_string(u128 value) {
  if (value == 0) return "0";
  std::string digits;
  while (value != 0) {
    digits.push_back(static_cast<char>('0' + static_cast<int>(value % 10)));
    value /= 10;
  }
  return {digits.rbegin(), digits.rend()};
}

inline u128 parse_u128(std::string_view text) {
  if (text.empty()) throw Error(ErrorKind::InvalidArgument, "empty integer");
  u128 value = 0;
  for (char c : text) {
    if (c < '0' || c > '9') {
      throw Error(ErrorKind::InvalidArgument, "not a non-negative integer: " + std::string(text));
    }
    const u128 digit = static_cast<u128>(c - '0');
    if (value > (kU128Max - digit) / 10) {
      throw Error(ErrorKind::Overflow, "integer exceeds 128 bits: " + std::string(text));
    }
    value = value * 10 + digit;
  }
  return value;
}

inline bool fits_u64(u128 value) { return (value >> 64) == 0; }

inline std::uint64_t low64(u128 value) { return static_cast<std::uint64_t>(value); }
inline std::uint64_t high64(u128 value) { return static_cast<std::uint64_t>(value >> 64); }

struct U128Hash {
  std::size_t operator()(u128 value) const noexcept {
    const std::uint64_t h = low64(value) ^ (high64(value) * 0x9E3779B97F4A7C15ULL);
    return std::hash<std::uint64_t>{}(h);
  }
};

}  // namespace coimg
