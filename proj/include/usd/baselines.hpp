#pragma once
// Comparison decoders sharing the request/ranking interfaces of the USD
// decoder: greedy, beam search, nucleus (top-p), best-of-N and
// self-consistency.

#include "usd/model.hpp"
#include "usd/sampling.hpp"
#include "usd/token_model.hpp"

#include <string>
#include <string_view>

namespace usd::baselines {

enum class StrategyKind { greedy, beam, nucleus, best_of_n, self_consistency, usd };

struct StrategySpec {
    StrategyKind kind = StrategyKind::usd;
    int width_or_n = 10;   // beam width, or N for best-of-N / self-consistency
    double top_p = 0.9;    // nucleus only

    bool operator==(const StrategySpec&) const = default;
};

std::string to_string(StrategyKind kind);
/// Throws UsageError for an unknown name.
StrategyKind parse_strategy(std::string_view name);

/// Spec with the per-kind default width (beam 5, N 10) and top_p 0.9.
StrategySpec default_spec(StrategyKind kind);
void check_spec(const StrategySpec& spec);

/// Top-k by probability; scores are probabilities renormalized over the
/// full candidate set.
RankedList greedy_rank(const DecodeRequest& req, int k);

struct BeamResult {
    RankedList ranking;
    std::size_t dropped = 0;  // finished beams whose path names no item
};

/// Width-limited beam over token steps. Scores are path probabilities.
BeamResult beam_rank(const synth::TokenFactoredModel& model, int width, int k,
                     const std::string& request_id = {});

/// Smallest probability-sorted prefix with cumulative mass >= top_p (the
/// nucleus). Returned in probability order.
std::vector<CandidateItem> nucleus_prefix(const DecodeRequest& req, double top_p);

RankedList nucleus_rank(const DecodeRequest& req, double top_p, int k, const SamplingState& state);

/// N draws with replacement at `temperature`; distinct draws ranked by
/// probability.
RankedList best_of_n_rank(const DecodeRequest& req, int n, int k, double temperature,
                          const SamplingState& state);

/// N draws with replacement at `temperature`; distinct draws ranked by
/// empirical frequency, then probability, then id. Scores are frequencies.
RankedList self_consistency_rank(const DecodeRequest& req, int n, int k, double temperature,
                                 const SamplingState& state);

}  // namespace usd::baselines
