#pragma once

#include <cstdint>

// Counter-based uniform variates: every draw is a pure function of
// (seed, stream, slot).  Sampling loops can therefore run chunked across
// threads in any order and still reproduce bit-identical results, and a
// single realization can be regenerated without replaying a sequence.
namespace pinchsec::rng {

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

// SplitMix64 finalizer (Steele/Lea/Flood); doubles as the key-derivation hash.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

// Key for one logical stream (e.g. one Monte Carlo realization index).
constexpr std::uint64_t derive_key(std::uint64_t seed, std::uint64_t stream) noexcept {
  return mix64((seed + kGolden) ^ mix64(stream * kGolden + 0xd1b54a32d192ed03ULL));
}

// 53-bit uniform in [0, 1).
constexpr double to_unit(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// slot-th variate of the stream identified by key.
constexpr double uniform_at(std::uint64_t key, std::uint64_t slot) noexcept {
  return to_unit(mix64(key + (slot + 1) * kGolden));
}

constexpr double uniform_at(std::uint64_t key, std::uint64_t slot, double lo, double hi) noexcept {
  return lo + uniform_at(key, slot) * (hi - lo);
}

}  // namespace pinchsec::rng
