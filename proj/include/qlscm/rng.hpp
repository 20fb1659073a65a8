#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace qlscm {

/// Seed for any randomized operation. 64-bit, wraps freely.
struct RngSeed {
  std::uint64_t value = 0;
};

namespace detail {

// Stafford variant 13 of the murmur3 finalizer.
inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

}  // namespace detail

/// Child seed for stream `key` under `parent`; Rng::split uses the same
/// derivation, so seeds and streams can be split interchangeably.
inline constexpr RngSeed derive_seed(RngSeed parent, std::uint64_t key) {
  return RngSeed{detail::mix64(
      parent.value ^ (0xd1b54a32d192ed03ULL * (key + 0x2545f4914f6cdd1dULL)))};
}

/// Counter-based splittable generator (SplitMix64 core).
///
/// Every stream is identified by a 64-bit key; `split(k)` derives a child
/// stream whose output is independent of the parent's position, so per-site
/// or per-replicate streams can be handed to parallel workers in any order
/// without changing the numbers they produce.
class Rng {
 public:
  explicit Rng(RngSeed seed) : id_(seed.value), state_(detail::mix64(seed.value)) {}
  explicit Rng(std::uint64_t seed) : Rng(RngSeed{seed}) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return detail::mix64(state_);
  }

  /// Uniform on the open interval (0, 1); never returns an endpoint, so
  /// inverse-CDF transforms stay finite.
  double next_double() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * next_double(); }

  /// Standard normal via Box-Muller (consumes two uniforms per call).
  double normal() {
    const double u1 = next_double();
    const double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Child stream for `key`, independent of this stream's position.
  Rng split(std::uint64_t key) const { return Rng(derive_seed(RngSeed{id_}, key)); }

  Rng split(std::uint64_t key1, std::uint64_t key2) const {
    return split(key1).split(key2);
  }

 private:
  std::uint64_t id_;     // stream identity, used only for splitting
  std::uint64_t state_;  // walk position
};

}  // namespace qlscm
