#pragma once
// Uncertainty-guided decoding.
//
//   Score(s) = (1 - alpha) * p(s) + alpha * Phi(s)
//   Phi(s)   = mass(c_s) / |c_s| * max(0, 1 - beta * H)
//   T        = T0 * (1 + gamma * H)
//
// decode() runs two passes: the first samples K candidates at T0 to measure
// H, the second resamples K at the adapted temperature and scores that pool.
// The final ranking is a deterministic sort of Score.

#include "usd/model.hpp"
#include "usd/sampling.hpp"

#include <vector>

namespace usd::decoder {

/// Draws min(k, n) distinct candidates without replacement, weighting each by
/// softmax(ln prob / temperature). Returned in draw order.
std::vector<CandidateItem> sample_candidates(const DecodeRequest& req, double temperature, int k,
                                             const SamplingState& state);

double adaptive_temperature(double base, double gamma, double h_sem);

/// Cluster-informed component for `item`. `clusters.entropy` is taken as the
/// entropy to damp by. Throws InvariantError if `item` is in no cluster.
double phi(const CandidateItem& item, const ClusterSet& clusters, double beta);

ScoredItem score(const CandidateItem& item, const ClusterSet& clusters, const UsdConfig& cfg);

struct DecodeResult {
    RankedList ranking;
    ClusterSet clusters;   // pass-2 clusters; ScoredItem::cluster_index points here
    double pass1_entropy = 0.0;
};

DecodeResult decode(const DecodeRequest& req, const UsdConfig& cfg);

}  // namespace usd::decoder
