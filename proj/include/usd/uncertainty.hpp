#pragma once
// Cluster-level (semantic) uncertainty over a sampled candidate pool.

#include "usd/model.hpp"

#include <span>
#include <vector>

namespace usd::uncertainty {

/// Copies `items` with probabilities rescaled to sum to one.
std::vector<CandidateItem> renormalize(std::span<const CandidateItem> items);

/// Sum of member probabilities.
double cluster_mass(std::span<const CandidateItem> members);

/// Shannon entropy in nats of a cluster distribution. With log_m
/// normalization the result is divided by ln(m); a single cluster is 0.
double semantic_entropy(std::span<const double> masses, EntropyNormalization normalization);

/// Renormalizes, clusters (or emits singletons when clustering is disabled),
/// and fills masses and entropy. Entropy is forced to 0 when uncertainty is
/// disabled.
ClusterSet estimate(std::span<const CandidateItem> items, const UsdConfig& cfg);

}  // namespace usd::uncertainty
