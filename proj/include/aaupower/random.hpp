#ifndef AAUPOWER_RANDOM_HPP
#define AAUPOWER_RANDOM_HPP

#include <cstdint>
#include <random>
#include <string_view>

namespace aaupower {

inline constexpr std::uint64_t kDefaultSeed = 20231005;

constexpr std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent generator for one named consumer ("generator", "init",
// "shuffle", ...) derived from a single top-level seed.
inline std::mt19937_64 make_stream(std::uint64_t seed, std::string_view name) {
  return std::mt19937_64(splitmix64(seed ^ fnv1a64(name)));
}

}  // namespace aaupower

#endif  // AAUPOWER_RANDOM_HPP
