#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace atsteg {

// splitmix64 finalizer; used to turn structured seeds into well-mixed engine seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t hash_string(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t derive_seed(std::uint64_t key, std::uint64_t salt) noexcept {
  return mix64(mix64(key) ^ (salt + 0x632be59bd9b4e019ULL));
}

constexpr std::uint64_t derive_seed(std::uint64_t key, std::string_view id,
                                    std::uint64_t salt = 0) noexcept {
  return derive_seed(derive_seed(key, hash_string(id)), salt);
}

// mt19937_64 output is specified by the standard; the distributions are not,
// so bounded draws go through these helpers to stay bit-reproducible.
using Engine = std::mt19937_64;

inline std::uint64_t uniform_below(Engine& eng, std::uint64_t bound) {
  // bound > 0; rejection sampling removes modulo bias
  const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % bound + 1) % bound;
  std::uint64_t v;
  do {
    v = eng();
  } while (v > limit);
  return v % bound;
}

inline double uniform01(Engine& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

template <typename It>
void shuffle(It first, It last, Engine& eng) {
  const auto n = static_cast<std::uint64_t>(last - first);
  for (std::uint64_t i = n; i > 1; --i) {
    const auto j = uniform_below(eng, i);
    std::swap(first[i - 1], first[j]);
  }
}

}  // namespace atsteg
