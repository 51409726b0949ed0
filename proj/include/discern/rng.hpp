#pragma once

// Pinned pseudo-random machinery. Every stream in the project is derived
// from these definitions so results do not depend on the standard library's
// distribution implementations.
//
//   splitmix64   - Steele, Lea & Flood (2014), used for seeding and key mixing
//   xoshiro256** - Blackman & Vigna (2018), the sampling generator
//   fnv1a64      - FNV-1a 64-bit string hash, used to turn ids into keys
//   normal       - Box-Muller (cosine branch only, one draw per two uniforms)

#include <array>
#include <cstdint>
#include <initializer_list>
#include <string_view>

namespace discern::rng {

constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

// Order-sensitive mix of a root seed with a sequence of string keys. Used to
// give every (cell, agent, headline) its own independent stream.
std::uint64_t derive_key(std::uint64_t seed, std::initializer_list<std::string_view> parts) noexcept;

class Xoshiro256 {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256(std::uint64_t seed) noexcept;

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()() noexcept;

  // Uniform on (0, 1): 53 random bits, never exactly 0.
  double uniform() noexcept;
  double normal() noexcept;
  double normal(double mean, double sd) noexcept { return mean + sd * normal(); }
  // Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound) noexcept;

 private:
  std::array<std::uint64_t, 4> s_{};
};

}  // namespace discern::rng
