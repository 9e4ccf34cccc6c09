#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace meshsim {

// Named random stream. The (seed, stream_id) pair fully determines the draw
// sequence; separate streams per concern (placement, traffic, mac-backoff,
// loss, ...) keep one concern's draws from perturbing another's.
//
// mt19937_64 output is specified by the standard, and all distributions here
// are hand-rolled from raw 64-bit draws, so sequences are identical across
// platforms and standard libraries.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::string_view stream_id)
      : gen_(mix(seed, fnv1a(stream_id))) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform01() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, bound), bound > 0. Rejection sampling keeps the
  // result exactly uniform and platform-independent.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = bound * ((~std::uint64_t{0}) / bound);
    std::uint64_t x;
    do {
      x = gen_();
    } while (x >= limit);
    return x % bound;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  bool bernoulli(double p) {
    if (p <= 0.0) return false;
    if (p >= 1.0) return true;
    return uniform01() < p;
  }

 private:
  static std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ull;
    }
    return h;
  }

  // splitmix64 finalizer over the combined seed.
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t label) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (label | 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::mt19937_64 gen_;
};

}  // namespace meshsim
