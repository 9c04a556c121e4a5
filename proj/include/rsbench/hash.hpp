// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string_view>

namespace rsbench {

// Platform-stable hashing. Every random decision in the toolkit is derived
// from these functions applied to explicit seeds; nothing reads global state.

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

inline constexpr std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) noexcept {
  return splitmix64(a ^ splitmix64(b));
}

template <typename... Rest>
inline constexpr std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b,
                                            Rest... rest) noexcept {
  return hash_combine(hash_combine(a, b), static_cast<std::uint64_t>(rest)...);
}

/// Maps a hash to a double uniformly distributed in [0, 1) using its top 53 bits.
inline constexpr double unit_interval(std::uint64_t h) noexcept {
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

}  // namespace rsbench
