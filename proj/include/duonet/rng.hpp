#pragma once

#include <cstdint>
#include <limits>

namespace duonet {

inline constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Identifies one random stream: (global seed, iteration, node, sample index).
struct StreamKey {
  std::uint64_t seed = 0;
  std::uint64_t iteration = 0;
  std::uint64_t node = 0;
  std::uint64_t sample = 0;

  std::uint64_t hash() const {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ iteration);
    h = splitmix64(h ^ node);
    return splitmix64(h ^ sample);
  }
};

// Counter-based generator: output t is a pure function of (key, t). Satisfies
// UniformRandomBitGenerator so it plugs into <random> distributions.
class KeyedEngine {
 public:
  using result_type = std::uint64_t;

  explicit KeyedEngine(const StreamKey& key) : key_(key.hash()) {}
  explicit KeyedEngine(std::uint64_t raw_key) : key_(splitmix64(raw_key)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return splitmix64(key_ + 0xd1b54a32d192ed03ULL * ++counter_); }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace duonet
