#pragma once

// Random stream contract.
//
// Every trajectory owns one std::mt19937_64 seeded with a single 64-bit
// integer (the standard fixes its output sequence bit for bit). Uniform
// variates in [0, 1) are the top 53 bits of one engine output scaled by
// 2^-53, so no implementation-defined distribution object is involved.
// Ensemble member seeds come from derive_seed(base_seed, index), which makes
// the result of an ensemble independent of execution order.

#include <concepts>
#include <cstdint>
#include <limits>
#include <random>

namespace recloop {

using Rng = std::mt19937_64;

template <class G>
concept Uniform64Generator =
    std::uniform_random_bit_generator<G> &&
    std::same_as<typename G::result_type, std::uint64_t> &&
    (G::min() == 0) && (G::max() == std::numeric_limits<std::uint64_t>::max());

/// Consumes exactly one engine output.
template <Uniform64Generator G>
double uniform01(G& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed of child stream `index` of the stream seeded by `parent`.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) noexcept {
  return mix64(parent ^ mix64(index + 0x9e3779b97f4a7c15ULL));
}

}  // namespace recloop
