#include "usd/clustering.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace usd::clustering {

namespace {

class DisjointSets {
public:
    explicit DisjointSets(std::size_t n) : parent_(n), rank_(n, 0) {
        std::iota(parent_.begin(), parent_.end(), std::size_t{0});
    }

    std::size_t find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (rank_[a] < rank_[b]) std::swap(a, b);
        parent_[b] = a;
        if (rank_[a] == rank_[b]) ++rank_[a];
    }

private:
    std::vector<std::size_t> parent_;
    std::vector<unsigned> rank_;
};

// Members sorted by id, clusters sorted by their first (smallest) member.
ClusterSet canonicalize(std::vector<SemanticCluster> clusters) {
    for (auto& c : clusters) {
        std::sort(c.members.begin(), c.members.end(),
                  [](const CandidateItem& a, const CandidateItem& b) { return a.id < b.id; });
        c.mass = 0.0;
        for (const auto& m : c.members) c.mass += m.prob;
    }
    std::sort(clusters.begin(), clusters.end(), [](const SemanticCluster& a, const SemanticCluster& b) {
        return a.members.front().id < b.members.front().id;
    });
    return ClusterSet{std::move(clusters), 0.0};
}

}  // namespace

double cosine_similarity(const LogitVector& a, const LogitVector& b) {
    if (a.dim() != b.dim()) {
        throw ValidationError(fmt::format("logit dimension mismatch ({} vs {})", a.dim(), b.dim()));
    }
    const double na = a.norm();
    const double nb = b.norm();
    if (na == 0.0 || nb == 0.0) throw ValidationError("zero-norm logit vector");
    double dot = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) dot += a.values[i] * b.values[i];
    return std::clamp(dot / (na * nb), -1.0, 1.0);
}

bool equivalent(const CandidateItem& a, const CandidateItem& b, double sim_threshold) {
    return cosine_similarity(a.logits, b.logits) > sim_threshold;
}

SimilarityMatrix similarity_matrix(std::span<const CandidateItem> items) {
    SimilarityMatrix m;
    m.n = items.size();
    m.values.assign(m.n * m.n, 0.0);
    for (std::size_t i = 0; i < m.n; ++i) {
        m.values[i * m.n + i] = 1.0;
        for (std::size_t j = i + 1; j < m.n; ++j) {
            const double s = cosine_similarity(items[i].logits, items[j].logits);
            m.values[i * m.n + j] = s;
            m.values[j * m.n + i] = s;
        }
    }
    return m;
}

ClusterSet cluster_candidates(std::span<const CandidateItem> items, double sim_threshold) {
    const auto sim = similarity_matrix(items);
    DisjointSets sets(items.size());
    for (std::size_t i = 0; i < items.size(); ++i) {
        for (std::size_t j = i + 1; j < items.size(); ++j) {
            if (sim.at(i, j) > sim_threshold) sets.unite(i, j);
        }
    }

    std::vector<SemanticCluster> clusters;
    std::vector<std::size_t> slot(items.size(), items.size());
    for (std::size_t i = 0; i < items.size(); ++i) {
        const std::size_t root = sets.find(i);
        if (slot[root] == items.size()) {
            slot[root] = clusters.size();
            clusters.emplace_back();
        }
        clusters[slot[root]].members.push_back(items[i]);
    }
    return canonicalize(std::move(clusters));
}

ClusterSet singleton_clusters(std::span<const CandidateItem> items) {
    std::vector<SemanticCluster> clusters;
    clusters.reserve(items.size());
    for (const auto& item : items) clusters.push_back(SemanticCluster{{item}, item.prob});
    return canonicalize(std::move(clusters));
}

}  // namespace usd::clustering
