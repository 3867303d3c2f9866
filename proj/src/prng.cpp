#include "cxrnet/prng.hpp"

#include <bit>

namespace cxrnet {

std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Prng::Prng(std::uint64_t seed) noexcept : seed_(seed) {
  std::uint64_t sm = seed;
  for (auto& word : state_) word = splitmix64(sm);
}

Prng Prng::derive(std::uint64_t seed,
                  std::initializer_list<std::uint64_t> keys) noexcept {
  std::uint64_t acc = seed;
  std::uint64_t mixed = splitmix64(acc);
  for (std::uint64_t key : keys) {
    std::uint64_t s = mixed ^ (key + 0x632be59bd9b4e019ULL);
    mixed = splitmix64(s);
  }
  return Prng(mixed);
}

std::uint64_t Prng::next_u64() noexcept {
  const std::uint64_t result = std::rotl(state_[1] * 5, 7) * 9;
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = std::rotl(state_[3], 45);
  return result;
}

double Prng::uniform() noexcept {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Prng::uniform(double lo, double hi) noexcept {
  return lo + (hi - lo) * uniform();
}

bool Prng::bernoulli(double p) noexcept { return uniform() < p; }

std::uint64_t Prng::below(std::uint64_t n) noexcept {
  // Reject the low remainder band of the 64-bit range.
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    const std::uint64_t r = next_u64();
    if (r >= threshold) return r % n;
  }
}

}  // namespace cxrnet
