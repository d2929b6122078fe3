#pragma once
// Logit-level semantic clustering.
//
// Two candidates are equivalent when the cosine similarity of their logit
// vectors is strictly above the threshold. Clusters are the connected
// components of that relation (single linkage cut at the threshold), so the
// result does not depend on input order.

#include "usd/model.hpp"

#include <span>
#include <vector>

namespace usd::clustering {

/// Cosine of the angle between two logit vectors, clamped to [-1, 1].
/// Throws ValidationError on dimension mismatch or a zero-norm input.
double cosine_similarity(const LogitVector& a, const LogitVector& b);

bool equivalent(const CandidateItem& a, const CandidateItem& b, double sim_threshold);

/// Symmetric n x n cosine-similarity matrix with unit diagonal.
struct SimilarityMatrix {
    std::size_t n = 0;
    std::vector<double> values;  // row-major

    double at(std::size_t i, std::size_t j) const { return values[i * n + j]; }
};

SimilarityMatrix similarity_matrix(std::span<const CandidateItem> items);

/// Partitions `items` into semantic clusters. Masses are the plain sums of
/// member `prob`; entropy is left at zero for the uncertainty module to fill.
ClusterSet cluster_candidates(std::span<const CandidateItem> items, double sim_threshold);

/// One cluster per item, canonically ordered. Used when clustering is ablated.
ClusterSet singleton_clusters(std::span<const CandidateItem> items);

}  // namespace usd::clustering
