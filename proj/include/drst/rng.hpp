#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

namespace drst {

// SplitMix64 output finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

// Seed for item `index` of a family keyed by `master` (trials, epochs, ...).
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return mix64(mix64(master) ^ mix64((index + 1) * kGoldenGamma));
}

inline double u64_to_open_unit(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

// Counter-based generator: draw k of stream s under seed is
// mix64(key(seed, s) + k * gamma), so (seed, stream, index) fixes every value
// and independent streams need no shared state.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : key_(derive_seed(seed, stream)) {}

  std::uint64_t next_u64() { return mix64(key_ + (++counter_) * kGoldenGamma); }

  // Uniform on the open interval (0, 1).
  double uniform() { return u64_to_open_unit(next_u64()); }

  // Standard normal via Box-Muller; both outputs of a pair are used.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    const double phi = 2.0 * std::numbers::pi * uniform();
    spare_ = r * std::sin(phi);
    has_spare_ = true;
    return r * std::cos(phi);
  }

  // Uniform integer in [0, bound) by 128-bit multiply-shift.
  std::uint64_t below(std::uint64_t bound) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * bound) >> 64);
  }

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Hash of the bit patterns of `values`, keyed by `seed`.
inline std::uint64_t hash_doubles(std::uint64_t seed, std::span<const double> values) {
  std::uint64_t h = mix64(seed ^ 0x5851F42D4C957F2DULL);
  for (double v : values) {
    if (v == 0.0) v = 0.0;  // fold -0.0 onto +0.0
    std::uint64_t bits = 0;
    std::memcpy(&bits, &v, sizeof bits);
    h = mix64(h ^ (bits + kGoldenGamma));
  }
  return h;
}

// Standard normal that is a fixed function of (seed, values).
inline double hashed_normal(std::uint64_t seed, std::span<const double> values) {
  const std::uint64_t h = hash_doubles(seed, values);
  const double u1 = u64_to_open_unit(mix64(h + kGoldenGamma));
  const double u2 = u64_to_open_unit(mix64(h + 2 * kGoldenGamma));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// Seeded Fisher-Yates permutation of 0..n-1.
inline std::vector<std::size_t> seeded_permutation(std::size_t n, CounterRng& rng) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.below(i));
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

}  // namespace drst
