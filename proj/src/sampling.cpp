#include "usd/sampling.hpp"

#include <algorithm>
#include <cmath>

namespace usd {

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

SamplingState SamplingState::for_request(std::uint64_t seed, std::string_view request_id, int pass) {
    return SamplingState{mix64(seed ^ fnv1a64(request_id)), pass};
}

std::mt19937_64 SamplingState::engine() const {
    return std::mt19937_64(mix64(rng_seed + static_cast<std::uint64_t>(pass_index)));
}

double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::size_t draw_index(std::span<const double> weights, std::mt19937_64& rng) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (!(total > 0.0)) throw InvariantError("draw_index: weights sum to zero");

    const double target = uniform01(rng) * total;
    double acc = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] <= 0.0) continue;
        acc += weights[i];
        last_positive = i;
        if (target < acc) return i;
    }
    return last_positive;
}

std::vector<double> tempered_weights(std::span<const CandidateItem> items, double temperature) {
    std::vector<double> logits(items.size());
    for (std::size_t i = 0; i < items.size(); ++i) logits[i] = std::log(items[i].prob) / temperature;
    const double top = *std::max_element(logits.begin(), logits.end());
    for (double& l : logits) l = std::exp(l - top);
    return logits;
}

}  // namespace usd
