#pragma once
// In-process entry points for host-language adapters. Each call validates
// its inputs exactly as the CLI does and delegates to the core modules; no
// formula is restated here.

#include "usd/decoder.hpp"
#include "usd/model.hpp"

#include <span>

namespace usd::engine {

decoder::DecodeResult decode(const DecodeRequest& req, const RawConfig& config);

/// Clusters the candidates of `req` at the configured threshold.
ClusterSet cluster(const DecodeRequest& req, const RawConfig& config);

/// Semantic entropy of the candidate set of `req` under `config`.
double entropy(const DecodeRequest& req, const RawConfig& config);

}  // namespace usd::engine
