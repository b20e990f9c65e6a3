#pragma once

#include <cstdint>

namespace qnet {

inline constexpr std::uint64_t kSplitMixGamma = 0x9E3779B97F4A7C15ull;

/// splitmix64 finalizer (Steele/Lea/Flood avalanche).
constexpr std::uint64_t splitmix64_mix(std::uint64_t x) {
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Seed for trial `index` derived from the master seed. Trials are seeded
/// independently so they can run in any order or concurrently and still
/// reproduce bit-identically.
constexpr std::uint64_t trial_seed(std::uint64_t master_seed, std::uint64_t index) {
  return splitmix64_mix(master_seed + (index + 1) * kSplitMixGamma);
}

/// Uniform 64-bit source. Every random decision in the protocol consumes
/// exactly one draw, which pins reproducibility across implementations.
class Rng {
 public:
  virtual ~Rng() = default;
  virtual std::uint64_t next_u64() = 0;

  /// Uniform integer in [0, bound), from a single draw (fixed-point scale of
  /// the 64-bit draw; the ordered-slot convention makes the top of the range
  /// map to the last slot).
  int uniform_int(int bound) {
    return static_cast<int>(
        (static_cast<unsigned __int128>(next_u64()) * static_cast<unsigned __int128>(bound)) >> 64);
  }

  /// Uniform double in [0, 1), 53 random bits, one draw.
  double uniform_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
};

/// Default generator: splitmix64 stream.
class SplitMixRng final : public Rng {
 public:
  explicit SplitMixRng(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next_u64() override {
    state_ += kSplitMixGamma;
    return splitmix64_mix(state_);
  }

 private:
  std::uint64_t state_;
};

/// Test hook: every draw returns the maximum, so target selection always
/// lands on the last slot (the virtual self-loop) and election draws always
/// return eta_max.
class StubSelfLoopRng final : public Rng {
 public:
  std::uint64_t next_u64() override { return ~0ull; }
};

}  // namespace qnet
