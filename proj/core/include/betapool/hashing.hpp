// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace betapool {

// Deterministic, platform-stable mixers used for counter-based RNG keys,
// derived fit seeds, and config hashes. Not cryptographic.

constexpr std::uint64_t kFnvOffsetBasis = 0xcbf29ce484222325ULL;

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::uint64_t h, std::string_view bytes) {
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Hash one delimited field so ("a","bc") never collides with ("ab","c").
constexpr std::uint64_t fnv1a_field(std::uint64_t h, std::string_view field) {
  h = fnv1a(h, field);
  return fnv1a(h, "|");
}

constexpr std::uint64_t fnv1a(std::string_view bytes) {
  return fnv1a(kFnvOffsetBasis, bytes);
}

}  // namespace betapool
