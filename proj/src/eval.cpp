#include "usd/eval.hpp"

#include "usd/decoder.hpp"
#include "usd/parallel.hpp"
#include "usd/token_model.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace usd::eval {

namespace {

constexpr int kBeamAlphabet = 4;

}  // namespace

Split leave_one_out_split(const std::vector<UserSequence>& sequences) {
    Split split;
    for (const auto& seq : sequences) {
        const auto& items = seq.items;
        if (items.size() < 3) {
            ++split.excluded;
            continue;
        }
        const auto n = items.size();
        split.train.push_back(UserSequence{seq.user_id, {items.begin(), items.end() - 2}});

        DecodeRequest validation;
        validation.request_id = seq.user_id + ":valid";
        validation.history.assign(items.begin(), items.end() - 2);
        validation.ground_truth = items[n - 2];
        split.validation.push_back(std::move(validation));

        DecodeRequest test;
        test.request_id = seq.user_id + ":test";
        test.history.assign(items.begin(), items.end() - 1);
        test.ground_truth = items[n - 1];
        split.test.push_back(std::move(test));
    }
    return split;
}

std::size_t rank_of(const RankedList& ranking, const ItemId& truth) {
    for (std::size_t i = 0; i < ranking.items.size(); ++i) {
        if (ranking.items[i].id == truth) return i + 1;
    }
    return 0;
}

double hit_rate_at_k(const RankedList& ranking, const ItemId& truth, int k) {
    const auto r = rank_of(ranking, truth);
    return r != 0 && r <= static_cast<std::size_t>(k) ? 1.0 : 0.0;
}

double ndcg_at_k(const RankedList& ranking, const ItemId& truth, int k) {
    const auto r = rank_of(ranking, truth);
    if (r == 0 || r > static_cast<std::size_t>(k)) return 0.0;
    return 1.0 / std::log2(static_cast<double>(r) + 1.0);
}

double mrr_at_k(const RankedList& ranking, const ItemId& truth, int k) {
    const auto r = rank_of(ranking, truth);
    if (r == 0 || r > static_cast<std::size_t>(k)) return 0.0;
    return 1.0 / static_cast<double>(r);
}

Ranker make_ranker(const baselines::StrategySpec& spec, const UsdConfig& cfg) {
    using baselines::StrategyKind;
    baselines::check_spec(spec);
    const int k = cfg.k_candidates;
    switch (spec.kind) {
        case StrategyKind::usd:
            return [cfg](const DecodeRequest& req) { return decoder::decode(req, cfg).ranking; };
        case StrategyKind::greedy:
            return [k](const DecodeRequest& req) { return baselines::greedy_rank(validate_request(req), k); };
        case StrategyKind::beam:
            return [k, width = spec.width_or_n](const DecodeRequest& req) {
                const auto model = synth::factor_candidates(validate_request(req), kBeamAlphabet);
                return baselines::beam_rank(model, width, k, req.request_id).ranking;
            };
        case StrategyKind::nucleus:
            return [k, cfg, top_p = spec.top_p](const DecodeRequest& req) {
                const auto state = SamplingState::for_request(cfg.seed, req.request_id);
                return baselines::nucleus_rank(validate_request(req), top_p, k, state);
            };
        case StrategyKind::best_of_n:
            return [k, cfg, n = spec.width_or_n](const DecodeRequest& req) {
                const auto state = SamplingState::for_request(cfg.seed, req.request_id);
                return baselines::best_of_n_rank(validate_request(req), n, k, cfg.base_temperature, state);
            };
        case StrategyKind::self_consistency:
            return [k, cfg, n = spec.width_or_n](const DecodeRequest& req) {
                const auto state = SamplingState::for_request(cfg.seed, req.request_id);
                return baselines::self_consistency_rank(validate_request(req), n, k, cfg.base_temperature, state);
            };
    }
    throw InvariantError("unhandled strategy kind");
}

EvalReport evaluate_rankings(const std::vector<DecodeRequest>& requests, const std::vector<RankedList>& rankings,
                             const std::vector<int>& ks) {
    if (requests.size() != rankings.size()) throw InvariantError("evaluate: rankings/requests size mismatch");
    if (requests.empty()) throw ValidationError("evaluate: no requests");
    for (int k : ks) {
        if (k < 1) throw ValidationError("evaluate: cutoff k must be >= 1");
    }
    for (const auto& req : requests) {
        if (!req.ground_truth) throw ValidationError(fmt::format("request '{}' has no ground_truth", req.request_id));
    }

    EvalReport report;
    report.n_requests = requests.size();
    for (int k : ks) {
        Metrics sum;
        for (std::size_t i = 0; i < requests.size(); ++i) {
            const auto& truth = *requests[i].ground_truth;
            sum.hr += hit_rate_at_k(rankings[i], truth, k);
            sum.ndcg += ndcg_at_k(rankings[i], truth, k);
            sum.mrr += mrr_at_k(rankings[i], truth, k);
        }
        const double n = static_cast<double>(requests.size());
        report.per_k[k] = Metrics{sum.hr / n, sum.ndcg / n, sum.mrr / n};
    }
    return report;
}

EvalReport evaluate(const std::vector<DecodeRequest>& requests, const baselines::StrategySpec& spec,
                    const UsdConfig& cfg, const std::vector<int>& ks, unsigned jobs) {
    for (const auto& req : requests) {
        if (!req.ground_truth) throw ValidationError(fmt::format("request '{}' has no ground_truth", req.request_id));
    }
    const auto ranker = make_ranker(spec, cfg);
    std::vector<RankedList> rankings(requests.size());
    parallel_for(requests.size(), jobs, [&](std::size_t i) { rankings[i] = ranker(requests[i]); });

    auto report = evaluate_rankings(requests, rankings, ks);
    report.spec = spec;
    report.strategy = strategy_label(spec);
    return report;
}

std::string strategy_label(const baselines::StrategySpec& spec) {
    using baselines::StrategyKind;
    switch (spec.kind) {
        case StrategyKind::beam: return fmt::format("beam(b={})", spec.width_or_n);
        case StrategyKind::nucleus: return fmt::format("nucleus(p={})", spec.top_p);
        case StrategyKind::best_of_n: return fmt::format("best_of_n(N={})", spec.width_or_n);
        case StrategyKind::self_consistency: return fmt::format("self_consistency(N={})", spec.width_or_n);
        default: return baselines::to_string(spec.kind);
    }
}

std::string format_table(const std::vector<EvalReport>& reports) {
    std::vector<int> ks;
    for (const auto& r : reports) {
        for (const auto& [k, m] : r.per_k) {
            if (std::find(ks.begin(), ks.end(), k) == ks.end()) ks.push_back(k);
        }
    }
    std::sort(ks.begin(), ks.end());

    std::size_t name_width = 8;
    for (const auto& r : reports) name_width = std::max(name_width, r.strategy.size());

    std::string out = fmt::format("{:<{}}", "Strategy", name_width);
    for (int k : ks) out += fmt::format("  {:>8}  {:>8}  {:>8}", fmt::format("HR@{}", k), fmt::format("NDCG@{}", k),
                                        fmt::format("MRR@{}", k));
    out += "\n";
    for (const auto& r : reports) {
        out += fmt::format("{:<{}}", r.strategy, name_width);
        for (int k : ks) {
            auto it = r.per_k.find(k);
            if (it == r.per_k.end()) {
                out += fmt::format("  {:>8}  {:>8}  {:>8}", "-", "-", "-");
            } else {
                out += fmt::format("  {:>8.4f}  {:>8.4f}  {:>8.4f}", it->second.hr, it->second.ndcg, it->second.mrr);
            }
        }
        out += "\n";
    }
    return out;
}

}  // namespace usd::eval
