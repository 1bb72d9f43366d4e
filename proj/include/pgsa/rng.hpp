#pragma once

#include <cstdint>
#include <random>

namespace pgsa {

/// SplitMix64 finalizer; used to derive independent child seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Child seed for task `index` of stream `root`. Deterministic, order-free.
inline std::uint64_t split_seed(std::uint64_t root, std::uint64_t index) {
  return mix_seed(mix_seed(root) ^ mix_seed(index + 0x632BE59BD9B4E019ULL));
}

/// Uniform double in the open interval (0,1) built from the top 53 bits.
/// std::uniform_real_distribution is implementation-defined, this is not.
class UniformStream {
 public:
  explicit UniformStream(std::uint64_t seed) : engine_(seed) {}

  double operator()() {
    const std::uint64_t bits = engine_() >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace pgsa
