#pragma once

// Seeded random streams with draws that do not depend on the standard
// library's distribution implementations, so sequences are identical across
// toolchains.

#include <cstdint>
#include <random>
#include <vector>

namespace telestab {

// SplitMix64 step; used to derive independent per-run seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// The k-th child seed of `master`.
inline std::uint64_t split_seed(std::uint64_t master, std::uint64_t k) {
  std::uint64_t s = master ^ (0xD1B54A32D192ED03ULL * (k + 1));
  splitmix64(s);
  return splitmix64(s);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Index drawn from non-negative weights summing to ~1.
  std::size_t categorical(const std::vector<double>& weights) {
    const double u = uniform();
    double acc = 0.0;
    std::size_t last = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (weights[i] <= 0) continue;
      acc += weights[i];
      last = i;
      if (u < acc) return i;
    }
    return last;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace telestab
