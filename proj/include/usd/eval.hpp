#pragma once
// Leave-one-out evaluation with HR@K, NDCG@K and MRR@K for a single relevant
// item per request. Ranks are 1-indexed.

#include "usd/baselines.hpp"
#include "usd/model.hpp"

#include <functional>
#include <map>
#include <string>
#include <vector>

namespace usd::eval {

struct UserSequence {
    std::string user_id;
    std::vector<ItemId> items;
};

/// Test and validation requests carry history and ground truth only;
/// candidates are attached later by whoever produces the candidate dump.
struct Split {
    std::vector<UserSequence> train;
    std::vector<DecodeRequest> validation;
    std::vector<DecodeRequest> test;
    std::size_t excluded = 0;  // sequences shorter than 3
};

Split leave_one_out_split(const std::vector<UserSequence>& sequences);

/// 1-indexed position of `truth`, or 0 if absent.
std::size_t rank_of(const RankedList& ranking, const ItemId& truth);

double hit_rate_at_k(const RankedList& ranking, const ItemId& truth, int k);
double ndcg_at_k(const RankedList& ranking, const ItemId& truth, int k);
double mrr_at_k(const RankedList& ranking, const ItemId& truth, int k);

struct Metrics {
    double hr = 0.0;
    double ndcg = 0.0;
    double mrr = 0.0;

    bool operator==(const Metrics&) const = default;
};

struct EvalReport {
    std::string strategy;  // display name
    baselines::StrategySpec spec;
    std::map<int, Metrics> per_k;
    std::size_t n_requests = 0;
};

using Ranker = std::function<RankedList(const DecodeRequest&)>;

/// Builds the ranker for a strategy. Beam search runs on the token
/// factorization of each request's candidate distribution.
Ranker make_ranker(const baselines::StrategySpec& spec, const UsdConfig& cfg);

/// Averages metrics uniformly over requests. Throws ValidationError naming
/// the first request without ground truth. `jobs` > 1 ranks in parallel;
/// results do not depend on it.
EvalReport evaluate(const std::vector<DecodeRequest>& requests, const baselines::StrategySpec& spec,
                    const UsdConfig& cfg, const std::vector<int>& ks = {3, 5}, unsigned jobs = 1);

/// Same, with precomputed rankings (parallel to `requests`).
EvalReport evaluate_rankings(const std::vector<DecodeRequest>& requests, const std::vector<RankedList>& rankings,
                             const std::vector<int>& ks);

std::string strategy_label(const baselines::StrategySpec& spec);

/// Aligned text table: one row per report, HR/NDCG/MRR grouped per K.
std::string format_table(const std::vector<EvalReport>& reports);

}  // namespace usd::eval
