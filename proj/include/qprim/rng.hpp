#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace qprim {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer. Bijective on 64-bit words.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Derives an independent child seed from a parent seed and a key path,
/// e.g. derive_seed(seed, {iteration, point, addend}). Pure function of its
/// inputs, so parallel callers never share generator state.
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) noexcept;

Rng make_rng(std::uint64_t seed);

}  // namespace qprim
