#pragma once
// Seeded synthetic corpora with known semantic structure.
//
// Items belong to groups whose logit vectors are near-parallel inside a group
// and near-orthogonal across groups, so thresholded cosine clustering
// recovers the groups exactly. Users walk a group-level Markov chain; the
// held-out item always comes from the chain's most likely next group.
// Candidate dumps place probability mass in configurable regimes that
// separate greedy decoding from cluster-aware scoring.

#include "usd/eval.hpp"
#include "usd/model.hpp"
#include "usd/token_model.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace usd::synth {

enum class Regime {
    usd_wins,  // greedy top-1 is a distractor; the true cluster has the highest per-member mass
    distinct,  // the truth is the single most likely item, but its cluster-mates are weak
    weak,      // true-cluster mass beats every distractor, per-member mass does not
    mixed,     // alternating usd_wins and distinct requests
};

std::string to_string(Regime r);
Regime parse_regime(const std::string& name);

struct SynthSpec {
    int n_users = 500;
    int n_items = 600;
    int n_groups = 60;
    double intra_group_sim_target = 0.9;
    double inter_group_sim_cap = 0.3;
    double sim_threshold = 0.8;  // clustering threshold the corpus must straddle
    int logit_dim = 64;
    double markov_concentration = 4.0;
    int sequence_length = 6;
    Regime regime = Regime::usd_wins;
    std::uint64_t seed = 42;

    bool operator==(const SynthSpec&) const = default;
};

void check_spec(const SynthSpec& spec);

struct CatalogItem {
    ItemId id;
    int group = 0;
    LogitVector logits;
};

struct Catalog {
    std::vector<CatalogItem> items;
    std::vector<std::vector<std::size_t>> groups;  // item indices per group
};

/// Throws ValidationError if the similarity constraints cannot be met within
/// the retry budget.
Catalog generate_catalog(const SynthSpec& spec);

/// Exhaustive pairwise check of the intra/inter similarity constraints.
/// Returns the number of violating pairs.
std::size_t count_violations(const Catalog& catalog, const SynthSpec& spec);

/// Row-stochastic group transition matrix; row g is p(next group | g).
std::vector<std::vector<double>> transition_matrix(const SynthSpec& spec);

/// One sequence per user of spec.sequence_length items. The last item is
/// drawn from the most likely successor group of the second-to-last item.
std::vector<eval::UserSequence> generate_interactions(const Catalog& catalog, const SynthSpec& spec);

struct LabeledRequest {
    DecodeRequest request;
    Regime regime = Regime::usd_wins;  // never `mixed`
    int true_group = 0;
    /// The regime's defining inequalities hold on the emitted candidates,
    /// evaluated against the generated group labels.
    bool regime_holds = false;
};

/// Candidate dumps for each user's leave-one-out test request.
std::vector<LabeledRequest> emit_candidate_dumps(const Catalog& catalog,
                                                 const std::vector<eval::UserSequence>& interactions,
                                                 const SynthSpec& spec);

/// Convenience: catalog, interactions and dumps in one call.
struct Corpus {
    Catalog catalog;
    std::vector<eval::UserSequence> interactions;
    std::vector<LabeledRequest> requests;
};

Corpus generate_corpus(const SynthSpec& spec);

/// Group label of `id` in `catalog`, or -1.
int group_of(const Catalog& catalog, const ItemId& id);

}  // namespace usd::synth
