#ifndef RIS_RNG_HPP_
#define RIS_RNG_HPP_

#include <cstdint>
#include <random>

namespace ris {

using Rng = std::mt19937_64;

// Independent per-subsystem streams derived from one run seed. Adding a
// consumer to one stream never shifts the draws of another.
enum class Stream : std::uint64_t {
  Init = 1,
  Env = 2,
  Replay = 3,
  Exploration = 4,
  Updates = 5,
  Eval = 6,
  Probe = 7,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline Rng make_stream(std::uint64_t seed, Stream stream) {
  return Rng(splitmix64(splitmix64(seed) ^ (static_cast<std::uint64_t>(stream) * 0xD1B54A32D192ED03ULL)));
}

}  // namespace ris

#endif  // RIS_RNG_HPP_
