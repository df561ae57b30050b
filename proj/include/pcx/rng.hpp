// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace pcx {

// Fully specified PRNG so that batch runs reproduce bit-identically across
// builds and worker counts. std::uniform_*_distribution is implementation
// defined and must not appear anywhere on a seeded path.

/// One step of the splitmix64 sequence (Steele/Lea/Flood constants).
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// 64-bit FNV-1a hash, used to key substreams by scene id.
inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

/// Mixes a master seed with a stream key into an independent substream seed:
/// two splitmix64 steps over (master xor key). This is the one derivation
/// the whole pipeline uses; changing it changes every seeded output.
inline std::uint64_t mix_seed(std::uint64_t master, std::uint64_t key) {
  std::uint64_t s = master ^ (key * 0x9E3779B97F4A7C15ull);
  splitmix64_next(s);
  splitmix64_next(s);
  return s;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() { return splitmix64_next(state_); }

  /// Uniform double in [0, 1), 53 random mantissa bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform integer in [0, n); unbiased via rejection. n must be > 0.
  std::uint64_t uniform_index(std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  /// In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform_index(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
};

/// Per-scene substream: derived from (master_seed, hash(scene_id)) so scenes
/// can be processed by any number of workers in any order.
inline Rng scene_substream(std::uint64_t master_seed, std::string_view scene_id) {
  return Rng(mix_seed(master_seed, fnv1a64(scene_id)));
}

/// Planning substream, distinct from every per-scene stream.
inline Rng plan_substream(std::uint64_t master_seed) {
  return Rng(mix_seed(master_seed, fnv1a64("__plan__")));
}

}  // namespace pcx
