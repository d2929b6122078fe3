#include "usd/uncertainty.hpp"

#include "usd/clustering.hpp"

#include <algorithm>
#include <cmath>

namespace usd::uncertainty {

std::vector<CandidateItem> renormalize(std::span<const CandidateItem> items) {
    double total = 0.0;
    for (const auto& item : items) total += item.prob;
    if (!(total > 0.0)) throw InvariantError("renormalize: total probability mass is not positive");

    std::vector<CandidateItem> out(items.begin(), items.end());
    for (auto& item : out) item.prob /= total;
    return out;
}

double cluster_mass(std::span<const CandidateItem> members) {
    double mass = 0.0;
    for (const auto& m : members) mass += m.prob;
    return mass;
}

double semantic_entropy(std::span<const double> masses, EntropyNormalization normalization) {
    if (masses.size() <= 1) return 0.0;
    double h = 0.0;
    for (double p : masses) {
        if (p > 0.0) h -= p * std::log(p);
    }
    // Rounding can leave a near-certain distribution a hair below zero.
    h = std::max(h, 0.0);
    if (normalization == EntropyNormalization::log_m) {
        h /= std::log(static_cast<double>(masses.size()));
    }
    return h;
}

ClusterSet estimate(std::span<const CandidateItem> items, const UsdConfig& cfg) {
    const auto pool = renormalize(items);
    ClusterSet set = cfg.enable_clustering ? clustering::cluster_candidates(pool, cfg.sim_threshold)
                                           : clustering::singleton_clusters(pool);

    std::vector<double> masses;
    masses.reserve(set.clusters.size());
    for (auto& c : set.clusters) {
        c.mass = cluster_mass(c.members);
        masses.push_back(c.mass);
    }
    set.entropy = cfg.enable_uncertainty ? semantic_entropy(masses, cfg.entropy_normalization) : 0.0;
    return set;
}

}  // namespace usd::uncertainty
