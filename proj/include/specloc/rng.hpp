#pragma once

// Counter-based random numbers. Every draw is a pure function of
// (seed, stream, counter), so results do not depend on iteration order
// or on how work is split across threads.

#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <span>
#include <string_view>

namespace specloc {

/// SplitMix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// FNV-1a, used to fold short tags (experiment ids) into seeds.
constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

/// Folds a sequence of words into one seed: h <- splitmix64(h ^ w) per word.
constexpr std::uint64_t mix_seed(std::uint64_t base, std::initializer_list<std::uint64_t> words) noexcept {
  std::uint64_t h = splitmix64(base);
  for (auto w : words) h = splitmix64(h ^ w);
  return h;
}

namespace detail {

constexpr void mulhilo32(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) noexcept {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

}  // namespace detail

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

/// Philox4x32 with 10 rounds (Salmon et al., SC'11).
constexpr PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key) noexcept {
  constexpr std::uint32_t kM0 = 0xD2511F53U, kM1 = 0xCD9E8D57U;
  constexpr std::uint32_t kW0 = 0x9E3779B9U, kW1 = 0xBB67AE85U;
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kW0;
      key[1] += kW1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    detail::mulhilo32(kM0, ctr[0], hi0, lo0);
    detail::mulhilo32(kM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

/// Keyed counter-based generator. `stream` selects an independent
/// substream; `index` addresses a single draw within it.
class CounterRng {
 public:
  constexpr explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0) noexcept
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)}, stream_(stream) {}

  constexpr PhiloxCounter block(std::uint64_t index) const noexcept {
    return philox4x32_10({static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                          static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)},
                         key_);
  }

  constexpr std::uint64_t bits(std::uint64_t index) const noexcept {
    const auto b = block(index);
    return (static_cast<std::uint64_t>(b[1]) << 32) | b[0];
  }

  /// Uniform on the open interval (0, 1) with 53-bit resolution.
  double uniform(std::uint64_t index) const noexcept { return to_open_unit(bits(index)); }

  /// Standard normal via Box-Muller on the two 64-bit halves of one block.
  double normal(std::uint64_t index) const noexcept {
    const auto b = block(index);
    const double u1 = to_open_unit((static_cast<std::uint64_t>(b[1]) << 32) | b[0]);
    const double u2 = to_open_unit((static_cast<std::uint64_t>(b[3]) << 32) | b[2]);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  void fill_normal(std::span<double> out, std::uint64_t first_index = 0) const noexcept {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = normal(first_index + i);
  }

  std::uint64_t stream() const noexcept { return stream_; }

 private:
  static double to_open_unit(std::uint64_t x) noexcept {
    return (static_cast<double>(x >> 11) + 0.5) * 0x1.0p-53;
  }

  PhiloxKey key_;
  std::uint64_t stream_;
};

/// Sequential view over a CounterRng; integer draws use only integer
/// arithmetic and are therefore identical across platforms.
class CounterStream {
 public:
  explicit CounterStream(std::uint64_t seed, std::uint64_t stream = 0) noexcept : rng_(seed, stream) {}

  std::uint64_t next_bits() noexcept { return rng_.bits(counter_++); }
  double next_uniform() noexcept { return rng_.uniform(counter_++); }
  double next_normal() noexcept { return rng_.normal(counter_++); }

  /// Uniform integer in [0, bound) by rejection; bound must be positive.
  std::uint64_t next_below(std::uint64_t bound) noexcept {
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t r = next_bits();
      if (r >= threshold) return r % bound;
    }
  }

  std::uint64_t position() const noexcept { return counter_; }

 private:
  CounterRng rng_;
  std::uint64_t counter_ = 0;
};

}  // namespace specloc
