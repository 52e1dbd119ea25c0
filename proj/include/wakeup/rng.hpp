#pragma once

#include <cstdint>
#include <initializer_list>

namespace wakeup {

// Counter-based randomness. Every random decision in the library is a pure
// function of a 64-bit seed and a small tuple of integer coordinates, so a
// draw never depends on how many other draws happened before it.

/// splitmix64 finalizer; a bijection on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Keyed hash of (seed, coordinates...).
constexpr std::uint64_t keyed_hash(std::uint64_t seed,
                                   std::initializer_list<std::uint64_t> coords) noexcept {
  std::uint64_t h = mix64(seed);
  for (std::uint64_t c : coords) {
    h = mix64(h ^ mix64(c + 0x632be59bd9b4e019ULL));
  }
  return h;
}

/// Maps a hash to a double uniform on [0, 1) with 53 bits of resolution.
constexpr double to_unit(std::uint64_t h) noexcept {
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

/// Bernoulli(p) draw at the given coordinates. p <= 0 never fires, p >= 1 always does.
constexpr bool keyed_bernoulli(double p, std::uint64_t seed,
                               std::initializer_list<std::uint64_t> coords) noexcept {
  return to_unit(keyed_hash(seed, coords)) < p;
}

/// Seeds for independent sub-streams of one seed. Tags keep them apart.
enum class StreamTag : std::uint64_t {
  kJamming = 0x4a414d,
  kProtocol = 0x50524f54,
  kPattern = 0x50415454,
  kArray = 0x41525259,
};

constexpr std::uint64_t substream(std::uint64_t seed, StreamTag tag) noexcept {
  return keyed_hash(seed, {static_cast<std::uint64_t>(tag)});
}

/// Sequential generator for places that need a plain stream (pattern sampling).
/// Satisfies UniformRandomBitGenerator.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }

  constexpr result_type operator()() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform integer in [0, bound) by rejection; bound must be > 0.
  constexpr std::uint64_t below(std::uint64_t bound) noexcept {
    const std::uint64_t limit = max() - max() % bound;
    std::uint64_t r = (*this)();
    while (r >= limit) r = (*this)();
    return r % bound;
  }

 private:
  std::uint64_t state_;
};

}  // namespace wakeup
