#include "usd/synth.hpp"

#include "usd/clustering.hpp"
#include "usd/sampling.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>

namespace usd::synth {

namespace {

constexpr int kItemRetries = 200;
constexpr int kCentroidRetries = 200;
constexpr double kLogitScale = 4.0;

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
    return std::min(n - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)));
}

double uniform_in(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

// Box-Muller; one of the pair is discarded to keep the stream simple.
double standard_normal(std::mt19937_64& rng) {
    const double u1 = 1.0 - uniform01(rng);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

template <class T>
void shuffle_in_place(std::vector<T>& v, std::mt19937_64& rng) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform_index(rng, i)]);
}

using Vec = std::vector<double>;

double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

void normalize(Vec& v) {
    const double n = std::sqrt(dot(v, v));
    for (double& x : v) x /= n;
}

Vec random_unit(std::mt19937_64& rng, int dim) {
    Vec v(static_cast<std::size_t>(dim));
    do {
        for (double& x : v) x = standard_normal(rng);
    } while (dot(v, v) < 1e-12);
    normalize(v);
    return v;
}

double cosine(const Vec& a, const Vec& b) {
    return dot(a, b) / std::sqrt(dot(a, a) * dot(b, b));
}

std::vector<Vec> draw_centroids(const SynthSpec& spec, std::mt19937_64& rng) {
    std::vector<Vec> centroids;
    for (int g = 0; g < spec.n_groups; ++g) {
        bool placed = false;
        for (int attempt = 0; attempt < kCentroidRetries && !placed; ++attempt) {
            Vec c = random_unit(rng, spec.logit_dim);
            // Gram-Schmidt against earlier centroids while the dimension allows.
            if (g < spec.logit_dim) {
                for (const auto& prev : centroids) {
                    const double d = dot(c, prev);
                    for (std::size_t i = 0; i < c.size(); ++i) c[i] -= d * prev[i];
                }
                if (dot(c, c) < 1e-12) continue;
                normalize(c);
            }
            placed = std::all_of(centroids.begin(), centroids.end(),
                                 [&](const Vec& prev) { return dot(c, prev) <= spec.inter_group_sim_cap; });
            if (placed) centroids.push_back(std::move(c));
        }
        if (!placed) {
            throw ValidationError(fmt::format(
                "synth: cannot place {} group centroids in dimension {} with inter-group cap {}", spec.n_groups,
                spec.logit_dim, spec.inter_group_sim_cap));
        }
    }
    return centroids;
}

double mean_prob(const std::vector<const CandidateItem*>& members) {
    double s = 0.0;
    for (const auto* m : members) s += m->prob;
    return s / static_cast<double>(members.size());
}

}  // namespace

std::string to_string(Regime r) {
    switch (r) {
        case Regime::usd_wins: return "usd_wins";
        case Regime::distinct: return "distinct";
        case Regime::weak: return "weak";
        case Regime::mixed: return "mixed";
    }
    return "unknown";
}

Regime parse_regime(const std::string& name) {
    for (auto r : {Regime::usd_wins, Regime::distinct, Regime::weak, Regime::mixed}) {
        if (name == to_string(r)) return r;
    }
    throw ValidationError(fmt::format("unknown regime: {}", name));
}

void check_spec(const SynthSpec& spec) {
    if (spec.n_users < 1 || spec.n_items < 1 || spec.n_groups < 1) {
        throw ValidationError("synth: n_users, n_items and n_groups must be positive");
    }
    if (spec.n_groups > spec.n_items) throw ValidationError("synth: n_groups must be <= n_items");
    if (spec.logit_dim < 1) throw ValidationError("synth: logit_dim must be positive");
    if (!(spec.sim_threshold >= 0.0 && spec.sim_threshold <= 1.0)) {
        throw ValidationError("synth: sim_threshold out of [0,1]");
    }
    if (!(spec.intra_group_sim_target > spec.sim_threshold && spec.intra_group_sim_target <= 1.0)) {
        throw ValidationError("synth: intra_group_sim_target must lie in (sim_threshold, 1]");
    }
    if (!(spec.inter_group_sim_cap >= 0.0 && spec.inter_group_sim_cap < spec.sim_threshold)) {
        throw ValidationError("synth: inter_group_sim_cap must lie in [0, sim_threshold)");
    }
    if (!(spec.markov_concentration > 0.0)) throw ValidationError("synth: markov_concentration must be > 0");
    if (spec.sequence_length < 3) throw ValidationError("synth: sequence_length must be >= 3");
}

Catalog generate_catalog(const SynthSpec& spec) {
    check_spec(spec);
    std::mt19937_64 rng(mix64(spec.seed ^ fnv1a64("catalog")));
    const auto centroids = draw_centroids(spec, rng);

    // Offsets orthogonal to the centroid with squared length eps2 keep every
    // within-group pair at cosine >= (1 - eps2) / (1 + eps2) >= target.
    const double t = spec.intra_group_sim_target;
    const double eps = std::sqrt(0.9 * (1.0 - t) / (1.0 + t));

    Catalog catalog;
    catalog.groups.resize(static_cast<std::size_t>(spec.n_groups));
    std::vector<Vec> vectors;
    for (int i = 0; i < spec.n_items; ++i) {
        const int g = i % spec.n_groups;
        const auto& c = centroids[static_cast<std::size_t>(g)];
        bool accepted = false;
        for (int attempt = 0; attempt < kItemRetries && !accepted; ++attempt) {
            Vec u = random_unit(rng, spec.logit_dim);
            const double d = dot(u, c);
            for (std::size_t k = 0; k < u.size(); ++k) u[k] -= d * c[k];
            const double un = std::sqrt(dot(u, u));
            Vec v = c;
            if (un > 1e-12) {
                for (std::size_t k = 0; k < v.size(); ++k) v[k] += eps * u[k] / un;
            }
            accepted = true;
            for (std::size_t j = 0; j < vectors.size() && accepted; ++j) {
                const double s = cosine(v, vectors[j]);
                accepted = catalog.items[j].group == g ? s >= spec.intra_group_sim_target
                                                       : s <= spec.inter_group_sim_cap;
            }
            if (accepted) {
                vectors.push_back(v);
                for (double& x : v) x *= kLogitScale;
                catalog.groups[static_cast<std::size_t>(g)].push_back(catalog.items.size());
                catalog.items.push_back(CatalogItem{ItemId(fmt::format("item{:05d}", i)), g, LogitVector(std::move(v))});
            }
        }
        if (!accepted) {
            throw ValidationError(fmt::format("synth: item {} violates similarity constraints after {} retries", i,
                                              kItemRetries));
        }
    }
    return catalog;
}

std::size_t count_violations(const Catalog& catalog, const SynthSpec& spec) {
    std::size_t bad = 0;
    for (std::size_t i = 0; i < catalog.items.size(); ++i) {
        for (std::size_t j = i + 1; j < catalog.items.size(); ++j) {
            const double s = clustering::cosine_similarity(catalog.items[i].logits, catalog.items[j].logits);
            const bool same = catalog.items[i].group == catalog.items[j].group;
            if (same ? s < spec.intra_group_sim_target : s > spec.inter_group_sim_cap) ++bad;
        }
    }
    return bad;
}

std::vector<std::vector<double>> transition_matrix(const SynthSpec& spec) {
    check_spec(spec);
    std::mt19937_64 rng(mix64(spec.seed ^ fnv1a64("markov")));
    const auto n = static_cast<std::size_t>(spec.n_groups);
    std::vector<std::vector<double>> rows(n, std::vector<double>(n, 0.0));
    for (auto& row : rows) {
        std::vector<double> u(n);
        for (double& x : u) x = uniform01(rng);
        const auto top = static_cast<std::size_t>(std::max_element(u.begin(), u.end()) - u.begin());
        if (std::isinf(spec.markov_concentration)) {
            row[top] = 1.0;
            continue;
        }
        double total = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            row[j] = std::exp(spec.markov_concentration * (u[j] - u[top]));
            total += row[j];
        }
        for (double& x : row) x /= total;
    }
    return rows;
}

std::vector<eval::UserSequence> generate_interactions(const Catalog& catalog, const SynthSpec& spec) {
    const auto rows = transition_matrix(spec);
    std::mt19937_64 rng(mix64(spec.seed ^ fnv1a64("interactions")));

    const auto draw_item = [&](int group) {
        const auto& members = catalog.groups[static_cast<std::size_t>(group)];
        return catalog.items[members[uniform_index(rng, members.size())]].id;
    };

    std::vector<eval::UserSequence> out;
    out.reserve(static_cast<std::size_t>(spec.n_users));
    for (int u = 0; u < spec.n_users; ++u) {
        eval::UserSequence seq;
        seq.user_id = fmt::format("u{:05d}", u);
        int group = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(spec.n_groups)));
        seq.items.push_back(draw_item(group));
        for (int step = 1; step < spec.sequence_length; ++step) {
            const auto& row = rows[static_cast<std::size_t>(group)];
            if (step + 1 == spec.sequence_length) {
                group = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
            } else {
                group = static_cast<int>(draw_index(row, rng));
            }
            seq.items.push_back(draw_item(group));
        }
        out.push_back(std::move(seq));
    }
    return out;
}

int group_of(const Catalog& catalog, const ItemId& id) {
    for (const auto& item : catalog.items) {
        if (item.id == id) return item.group;
    }
    return -1;
}

namespace {

struct Composer {
    const Catalog& catalog;
    std::mt19937_64& rng;
    std::map<ItemId, const CatalogItem*> by_id;

    // `count` distinct members of `group`, starting with `first` if given.
    std::vector<const CatalogItem*> members(int group, std::size_t count, const ItemId* first) {
        std::vector<std::size_t> pool = catalog.groups[static_cast<std::size_t>(group)];
        shuffle_in_place(pool, rng);
        std::vector<const CatalogItem*> out;
        if (first) out.push_back(by_id.at(*first));
        for (std::size_t idx : pool) {
            if (out.size() == count) break;
            const auto* item = &catalog.items[idx];
            if (first && item->id == *first) continue;
            out.push_back(item);
        }
        return out;
    }

    // `count` distinct groups other than `exclude`.
    std::vector<int> other_groups(int exclude, std::size_t count) {
        std::vector<int> pool;
        for (int g = 0; g < static_cast<int>(catalog.groups.size()); ++g) {
            if (g != exclude && catalog.groups[static_cast<std::size_t>(g)].size() >= 3) pool.push_back(g);
        }
        shuffle_in_place(pool, rng);
        pool.resize(std::min(pool.size(), count));
        return pool;
    }
};

CandidateItem candidate(const CatalogItem* item, double prob) {
    return CandidateItem{item->id, item->logits, prob};
}

bool check_regime(Regime regime, const DecodeRequest& req, const Catalog& catalog, int true_group) {
    std::map<int, std::vector<const CandidateItem*>> by_group;
    for (const auto& c : req.candidates) by_group[group_of(catalog, c.id)].push_back(&c);

    const auto& true_members = by_group[true_group];
    double true_max = 0.0;
    double true_mass = 0.0;
    for (const auto* m : true_members) {
        true_max = std::max(true_max, m->prob);
        true_mass += m->prob;
    }
    const double true_mean = mean_prob(true_members);

    double other_max = 0.0;
    double other_mean_max = 0.0;
    for (const auto& [g, members] : by_group) {
        if (g == true_group) continue;
        other_mean_max = std::max(other_mean_max, mean_prob(members));
        for (const auto* m : members) other_max = std::max(other_max, m->prob);
    }

    const ItemId& truth = *req.ground_truth;
    double truth_prob = 0.0;
    for (const auto* m : true_members) {
        if (m->id == truth) truth_prob = m->prob;
    }

    switch (regime) {
        case Regime::usd_wins: return other_max > true_max && true_mean > other_mean_max;
        case Regime::distinct: return truth_prob > other_max && other_mean_max > true_mean;
        case Regime::weak: return true_mass > other_max && true_mean < other_max;
        case Regime::mixed: break;
    }
    return false;
}

}  // namespace

std::vector<LabeledRequest> emit_candidate_dumps(const Catalog& catalog,
                                                 const std::vector<eval::UserSequence>& interactions,
                                                 const SynthSpec& spec) {
    for (const auto& g : catalog.groups) {
        if (g.size() < 3) throw ValidationError("synth: candidate dumps need at least 3 items per group");
    }
    if (catalog.groups.size() < 4) throw ValidationError("synth: candidate dumps need at least 4 groups");

    std::mt19937_64 rng(mix64(spec.seed ^ fnv1a64("candidates")));
    Composer compose{catalog, rng, {}};
    for (const auto& item : catalog.items) compose.by_id.emplace(item.id, &item);

    const auto split = eval::leave_one_out_split(interactions);
    std::vector<LabeledRequest> out;
    out.reserve(split.test.size());
    for (std::size_t u = 0; u < split.test.size(); ++u) {
        LabeledRequest labeled;
        labeled.request = split.test[u];
        const ItemId truth = *labeled.request.ground_truth;
        const int tg = group_of(catalog, truth);
        labeled.true_group = tg;

        Regime regime = spec.regime;
        if (regime == Regime::mixed) regime = u % 2 == 0 ? Regime::usd_wins : Regime::distinct;
        labeled.regime = regime;

        auto& cands = labeled.request.candidates;
        const auto true_members = compose.members(tg, 3, &truth);
        const auto others = compose.other_groups(tg, 3);
        const auto second = compose.members(others[0], 3, nullptr);
        const auto single_a = compose.members(others[1], 1, nullptr);
        const auto single_b = compose.members(others[2], 1, nullptr);

        double used = 0.0;
        const auto add = [&](const CatalogItem* item, double p) {
            cands.push_back(candidate(item, p));
            used += p;
        };

        switch (regime) {
            case Regime::usd_wins: {
                // Strong, even true cluster; a distractor that beats every true
                // member individually but sits with near-zero cluster-mates.
                const double pt = uniform_in(rng, 0.20, 0.22);
                add(true_members[0], pt);
                add(true_members[1], uniform_in(rng, 0.16, 0.18));
                add(true_members[2], uniform_in(rng, 0.16, 0.18));
                add(second[0], pt + uniform_in(rng, 0.01, 0.025));
                add(second[1], uniform_in(rng, 0.008, 0.012));
                add(second[2], uniform_in(rng, 0.008, 0.012));
                break;
            }
            case Regime::distinct: {
                // The truth leads individually; its cluster-mates are weak and
                // another cluster is uniformly strong.
                add(true_members[0], uniform_in(rng, 0.30, 0.33));
                add(true_members[1], uniform_in(rng, 0.03, 0.04));
                add(true_members[2], uniform_in(rng, 0.03, 0.04));
                for (const auto* m : second) add(m, uniform_in(rng, 0.17, 0.19));
                break;
            }
            case Regime::weak: {
                // Cluster mass beats the distractor, per-member mass does not.
                for (const auto* m : true_members) add(m, uniform_in(rng, 0.17, 0.19));
                add(second[0], uniform_in(rng, 0.24, 0.26));
                add(second[1], uniform_in(rng, 0.01, 0.02));
                add(second[2], uniform_in(rng, 0.01, 0.02));
                break;
            }
            case Regime::mixed: throw InvariantError("mixed regime not resolved");
        }
        const double rest = (1.0 - used) / 2.0;
        add(single_a[0], rest);
        add(single_b[0], rest);

        shuffle_in_place(cands, rng);
        labeled.regime_holds = check_regime(regime, labeled.request, catalog, tg);
        out.push_back(std::move(labeled));
    }
    return out;
}

Corpus generate_corpus(const SynthSpec& spec) {
    Corpus corpus;
    corpus.catalog = generate_catalog(spec);
    corpus.interactions = generate_interactions(corpus.catalog, spec);
    corpus.requests = emit_candidate_dumps(corpus.catalog, corpus.interactions, spec);
    return corpus;
}

}  // namespace usd::synth
