#pragma once
// Seeded, platform-independent sampling primitives.
//
// std::mt19937_64 output is fixed by the standard, but the standard
// distributions are not, so uniforms and categorical draws are derived here
// directly from raw engine words.

#include "usd/model.hpp"

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace usd {

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Per-request RNG state. The seed depends only on the global seed and the
/// request id, never on batch position.
struct SamplingState {
    std::uint64_t rng_seed = 0;
    int pass_index = 1;

    static SamplingState for_request(std::uint64_t seed, std::string_view request_id, int pass = 1);
    std::mt19937_64 engine() const;
};

/// Uniform double in [0, 1) with 53 random bits.
double uniform01(std::mt19937_64& rng);

/// Index drawn with probability proportional to `weights` (non-negative, not
/// all zero).
std::size_t draw_index(std::span<const double> weights, std::mt19937_64& rng);

/// Unnormalized weights of softmax(ln p / temperature), max-shifted.
std::vector<double> tempered_weights(std::span<const CandidateItem> items, double temperature);

}  // namespace usd
