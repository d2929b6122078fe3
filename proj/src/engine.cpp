#include "usd/engine.hpp"

#include "usd/clustering.hpp"
#include "usd/uncertainty.hpp"

namespace usd::engine {

decoder::DecodeResult decode(const DecodeRequest& req, const RawConfig& config) {
    return decoder::decode(validate_request(req), validate_config(config));
}

ClusterSet cluster(const DecodeRequest& req, const RawConfig& config) {
    const auto cfg = validate_config(config);
    return clustering::cluster_candidates(validate_request(req).candidates, cfg.sim_threshold);
}

double entropy(const DecodeRequest& req, const RawConfig& config) {
    return uncertainty::estimate(validate_request(req).candidates, validate_config(config)).entropy;
}

}  // namespace usd::engine
