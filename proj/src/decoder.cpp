#include "usd/decoder.hpp"

#include "usd/uncertainty.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace usd::decoder {

std::vector<CandidateItem> sample_candidates(const DecodeRequest& req, double temperature, int k,
                                             const SamplingState& state) {
    if (!(temperature > 0.0)) throw ValidationError("sampling temperature must be > 0");
    if (k < 1) throw ValidationError("sample size must be >= 1");

    // Canonical order so the draw does not depend on how the producer listed
    // the candidates.
    std::vector<CandidateItem> pool = req.candidates;
    std::sort(pool.begin(), pool.end(),
              [](const CandidateItem& a, const CandidateItem& b) { return a.id < b.id; });

    const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(k), pool.size());
    if (take == pool.size()) return pool;

    auto weights = tempered_weights(pool, temperature);
    auto rng = state.engine();
    std::vector<CandidateItem> out;
    out.reserve(take);
    while (out.size() < take) {
        const std::size_t idx = draw_index(weights, rng);
        out.push_back(pool[idx]);
        weights[idx] = 0.0;
        // Extreme temperatures can underflow every remaining weight.
        if (out.size() < take && std::none_of(weights.begin(), weights.end(), [](double w) { return w > 0.0; })) {
            for (std::size_t i = 0; i < pool.size(); ++i) {
                if (std::none_of(out.begin(), out.end(), [&](const CandidateItem& c) { return c.id == pool[i].id; })) {
                    weights[i] = 1.0;
                }
            }
        }
    }
    return out;
}

double adaptive_temperature(double base, double gamma, double h_sem) {
    return base * (1.0 + gamma * h_sem);
}

double phi(const CandidateItem& item, const ClusterSet& clusters, double beta) {
    const auto idx = clusters.find(item.id);
    if (!idx) throw InvariantError(fmt::format("phi: item '{}' is not in any cluster", item.id.value));
    const auto& c = clusters.clusters[*idx];
    const double damping = std::max(0.0, 1.0 - beta * clusters.entropy);
    return c.mass / static_cast<double>(c.size()) * damping;
}

ScoredItem score(const CandidateItem& item, const ClusterSet& clusters, const UsdConfig& cfg) {
    const auto idx = clusters.find(item.id);
    if (!idx) throw InvariantError(fmt::format("score: item '{}' is not in any cluster", item.id.value));
    ScoredItem s;
    s.id = item.id;
    s.base_prob = item.prob;
    s.phi = phi(item, clusters, cfg.beta);
    s.score = (1.0 - cfg.alpha) * s.base_prob + cfg.alpha * s.phi;
    s.cluster_index = *idx;
    return s;
}

DecodeResult decode(const DecodeRequest& req, const UsdConfig& cfg) {
    validate_request(req);

    const auto first_state = SamplingState::for_request(cfg.seed, req.request_id, 1);
    const auto first_pool = sample_candidates(req, cfg.base_temperature, cfg.k_candidates, first_state);
    const double h1 = uncertainty::estimate(first_pool, cfg).entropy;

    const double temperature = adaptive_temperature(cfg.base_temperature, cfg.gamma, h1);
    const auto second_state = SamplingState{first_state.rng_seed, 2};
    const auto second_pool = sample_candidates(req, temperature, cfg.k_candidates, second_state);

    DecodeResult result;
    result.pass1_entropy = h1;
    result.clusters = uncertainty::estimate(second_pool, cfg);
    result.ranking.request_id = req.request_id;
    result.ranking.effective_temperature = temperature;
    for (const auto& cluster : result.clusters.clusters) {
        for (const auto& member : cluster.members) {
            result.ranking.items.push_back(score(member, result.clusters, cfg));
        }
    }
    sort_ranking(result.ranking.items);
    return result;
}

}  // namespace usd::decoder
