#include "usd/baselines.hpp"

#include "usd/decoder.hpp"
#include "usd/uncertainty.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>

namespace usd::baselines {

namespace {

constexpr double kMassTolerance = 1e-12;

std::vector<CandidateItem> by_id(std::vector<CandidateItem> items) {
    std::sort(items.begin(), items.end(), [](const CandidateItem& a, const CandidateItem& b) { return a.id < b.id; });
    return items;
}

ScoredItem as_scored(const CandidateItem& item, double score) {
    return ScoredItem{item.id, item.prob, 0.0, score, 0};
}

RankedList rank_by_prob(const std::string& request_id, const std::vector<CandidateItem>& items, int k,
                        double temperature) {
    RankedList out;
    out.request_id = request_id;
    out.effective_temperature = temperature;
    for (const auto& item : items) out.items.push_back(as_scored(item, item.prob));
    sort_ranking(out.items);
    if (out.items.size() > static_cast<std::size_t>(k)) out.items.resize(static_cast<std::size_t>(k));
    return out;
}

// Per-item draw counts of n samples with replacement, in id order.
std::vector<int> draw_counts(const std::vector<CandidateItem>& pool, int n, double temperature,
                             const SamplingState& state) {
    if (!(temperature > 0.0)) throw ValidationError("sampling temperature must be > 0");
    const auto weights = tempered_weights(pool, temperature);
    auto rng = state.engine();
    std::vector<int> counts(pool.size(), 0);
    for (int i = 0; i < n; ++i) ++counts[draw_index(weights, rng)];
    return counts;
}

void require_positive(const char* what, int v) {
    if (v < 1) throw ValidationError(fmt::format("{} must be >= 1", what));
}

}  // namespace

std::string to_string(StrategyKind kind) {
    switch (kind) {
        case StrategyKind::greedy: return "greedy";
        case StrategyKind::beam: return "beam";
        case StrategyKind::nucleus: return "nucleus";
        case StrategyKind::best_of_n: return "best_of_n";
        case StrategyKind::self_consistency: return "self_consistency";
        case StrategyKind::usd: return "usd";
    }
    return "unknown";
}

StrategyKind parse_strategy(std::string_view name) {
    for (auto kind : {StrategyKind::greedy, StrategyKind::beam, StrategyKind::nucleus, StrategyKind::best_of_n,
                      StrategyKind::self_consistency, StrategyKind::usd}) {
        if (name == to_string(kind)) return kind;
    }
    throw UsageError(fmt::format("unknown strategy: {}", name));
}

StrategySpec default_spec(StrategyKind kind) {
    StrategySpec spec;
    spec.kind = kind;
    spec.width_or_n = kind == StrategyKind::beam ? 5 : 10;
    spec.top_p = 0.9;
    return spec;
}

void check_spec(const StrategySpec& spec) {
    require_positive("beam width / N", spec.width_or_n);
    if (!(spec.top_p > 0.0 && spec.top_p <= 1.0)) throw ValidationError("top_p out of (0,1]");
}

RankedList greedy_rank(const DecodeRequest& req, int k) {
    require_positive("k", k);
    return rank_by_prob(req.request_id, uncertainty::renormalize(req.candidates), k, 1.0);
}

BeamResult beam_rank(const synth::TokenFactoredModel& model, int width, int k, const std::string& request_id) {
    require_positive("beam width", width);
    require_positive("k", k);

    struct Beam {
        synth::TokenPath path;
        double log_prob = 0.0;
    };
    const auto better = [](const Beam& a, const Beam& b) {
        if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
        return a.path < b.path;
    };

    std::vector<Beam> beams{Beam{}};
    for (int step = 0; step < model.depth(); ++step) {
        std::vector<Beam> expanded;
        for (const auto& beam : beams) {
            const auto& table = model.table(beam.path);
            for (int token = 0; token < model.alphabet_size(); ++token) {
                const double p = table[static_cast<std::size_t>(token)];
                if (p <= 0.0) continue;
                Beam next = beam;
                next.path.push_back(token);
                next.log_prob += std::log(p);
                expanded.push_back(std::move(next));
            }
        }
        std::sort(expanded.begin(), expanded.end(), better);
        if (expanded.size() > static_cast<std::size_t>(width)) expanded.resize(static_cast<std::size_t>(width));
        beams = std::move(expanded);
    }

    BeamResult result;
    result.ranking.request_id = request_id;
    result.ranking.effective_temperature = 1.0;
    for (const auto& beam : beams) {
        auto id = model.item_at(beam.path);
        if (!id) {
            ++result.dropped;
            continue;
        }
        const double p = std::exp(beam.log_prob);
        result.ranking.items.push_back(ScoredItem{*id, p, 0.0, p, 0});
    }
    sort_ranking(result.ranking.items);
    if (result.ranking.items.size() > static_cast<std::size_t>(k)) {
        result.ranking.items.resize(static_cast<std::size_t>(k));
    }
    return result;
}

std::vector<CandidateItem> nucleus_prefix(const DecodeRequest& req, double top_p) {
    if (!(top_p > 0.0 && top_p <= 1.0)) throw ValidationError("top_p out of (0,1]");
    auto items = uncertainty::renormalize(req.candidates);
    std::sort(items.begin(), items.end(), [](const CandidateItem& a, const CandidateItem& b) {
        if (a.prob != b.prob) return a.prob > b.prob;
        return a.id < b.id;
    });
    double cumulative = 0.0;
    std::size_t keep = 0;
    while (keep < items.size()) {
        cumulative += items[keep].prob;
        ++keep;
        if (cumulative >= top_p - kMassTolerance) break;
    }
    items.resize(keep);
    return items;
}

RankedList nucleus_rank(const DecodeRequest& req, double top_p, int k, const SamplingState& state) {
    require_positive("k", k);
    DecodeRequest nucleus;
    nucleus.request_id = req.request_id;
    nucleus.candidates = nucleus_prefix(req, top_p);
    // Draw weights come from the renormalized prefix; scores stay on the
    // full-set scale.
    const auto sampled = decoder::sample_candidates(nucleus, 1.0, k, state);
    return rank_by_prob(req.request_id, sampled, k, 1.0);
}

RankedList best_of_n_rank(const DecodeRequest& req, int n, int k, double temperature, const SamplingState& state) {
    require_positive("N", n);
    require_positive("k", k);
    const auto pool = by_id(uncertainty::renormalize(req.candidates));
    const auto counts = draw_counts(pool, n, temperature, state);
    std::vector<CandidateItem> drawn;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        if (counts[i] > 0) drawn.push_back(pool[i]);
    }
    return rank_by_prob(req.request_id, drawn, k, temperature);
}

RankedList self_consistency_rank(const DecodeRequest& req, int n, int k, double temperature,
                                 const SamplingState& state) {
    require_positive("N", n);
    require_positive("k", k);
    const auto pool = by_id(uncertainty::renormalize(req.candidates));
    const auto counts = draw_counts(pool, n, temperature, state);

    struct Vote {
        const CandidateItem* item;
        int count;
    };
    std::vector<Vote> votes;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        if (counts[i] > 0) votes.push_back(Vote{&pool[i], counts[i]});
    }
    std::sort(votes.begin(), votes.end(), [](const Vote& a, const Vote& b) {
        if (a.count != b.count) return a.count > b.count;
        if (a.item->prob != b.item->prob) return a.item->prob > b.item->prob;
        return a.item->id < b.item->id;
    });

    RankedList out;
    out.request_id = req.request_id;
    out.effective_temperature = temperature;
    for (const auto& v : votes) {
        if (out.items.size() == static_cast<std::size_t>(k)) break;
        out.items.push_back(as_scored(*v.item, static_cast<double>(v.count) / n));
    }
    return out;
}

}  // namespace usd::baselines
