#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace ltts {

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// FNV-1a over the tag bytes.
constexpr std::uint64_t hash_tag(std::string_view tag) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Seed of a named substream of `master`; extra integers distinguish instances.
template <typename... Ints>
constexpr std::uint64_t substream_seed(std::uint64_t master, std::string_view tag, Ints... ids) noexcept {
  std::uint64_t s = mix64(master ^ hash_tag(tag));
  ((s = mix64(s ^ static_cast<std::uint64_t>(ids))), ...);
  return s;
}

template <typename... Ints>
std::mt19937_64 substream(std::uint64_t master, std::string_view tag, Ints... ids) {
  return std::mt19937_64(substream_seed(master, tag, ids...));
}

} // namespace ltts
