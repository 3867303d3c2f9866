#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <initializer_list>

namespace cxrnet {

/// SplitMix64 finalizer. Used for seeding and for deriving substream seeds.
std::uint64_t splitmix64(std::uint64_t& state) noexcept;

/// Reproducible pseudo-random generator: xoshiro256** (Blackman & Vigna),
/// with its 256-bit state expanded from a 64-bit seed by SplitMix64.
///
/// Every derived quantity (uniform doubles, bounded integers, Bernoulli
/// draws) is computed here from raw 64-bit outputs, so the stream is
/// identical on every platform and standard library. The standard
/// `<random>` distributions are deliberately not used for that reason.
///
/// A Prng is single-owner. Consumers that need independent streams (one per
/// augmented image, one per epoch shuffle) obtain them with `derive`.
class Prng {
 public:
  explicit Prng(std::uint64_t seed = 0) noexcept;

  /// Independent stream keyed by `(seed, keys...)`.
  static Prng derive(std::uint64_t seed,
                     std::initializer_list<std::uint64_t> keys) noexcept;

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() noexcept;

  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform() noexcept;

  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) noexcept;

  /// True with probability p.
  bool bernoulli(double p) noexcept;

  /// Uniform integer on [0, n). n must be positive. Unbiased (rejection).
  std::uint64_t below(std::uint64_t n) noexcept;

 private:
  std::uint64_t seed_;
  std::array<std::uint64_t, 4> state_;
};

}  // namespace cxrnet
