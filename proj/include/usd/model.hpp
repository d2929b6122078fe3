#pragma once
// Shared domain types for uncertainty-aware semantic decoding.
//
// Everything here is plain data. Invariants are enforced by validate_config()
// and validate_request(); the algorithms assume they already hold.

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace usd {

// ---------------------------------------------------------------------------
// Errors. The CLI maps each class to its own exit code.
// ---------------------------------------------------------------------------

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvariantError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Candidate records
// ---------------------------------------------------------------------------

struct ItemId {
    std::string value;

    ItemId() = default;
    explicit ItemId(std::string v) : value(std::move(v)) {}

    bool empty() const { return value.empty(); }
    auto operator<=>(const ItemId&) const = default;
};

struct LogitVector {
    std::vector<double> values;

    LogitVector() = default;
    LogitVector(std::initializer_list<double> v) : values(v) {}
    explicit LogitVector(std::vector<double> v) : values(std::move(v)) {}

    std::size_t dim() const { return values.size(); }
    double norm() const;
    bool operator==(const LogitVector&) const = default;
};

struct CandidateItem {
    ItemId id;
    LogitVector logits;
    double prob = 0.0;  // model probability, (0,1]

    bool operator==(const CandidateItem&) const = default;
};

struct DecodeRequest {
    std::string request_id;
    std::vector<ItemId> history;
    std::vector<CandidateItem> candidates;
    std::optional<ItemId> ground_truth;

    bool operator==(const DecodeRequest&) const = default;
};

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

enum class EntropyNormalization { none, log_m };

struct UsdConfig {
    double sim_threshold = 0.8;
    double alpha = 0.5;
    double beta = 0.3;
    double gamma = 0.5;
    double base_temperature = 0.95;
    int k_candidates = 10;
    // Entropy is always measured in nats.
    EntropyNormalization entropy_normalization = EntropyNormalization::none;
    bool enable_clustering = true;
    bool enable_uncertainty = true;
    std::uint64_t seed = 0;

    bool operator==(const UsdConfig&) const = default;
};

using RawConfig = std::map<std::string, std::string>;

/// Builds a config from string key/value pairs. Missing keys take defaults;
/// unknown keys and out-of-range values throw ValidationError naming the key.
UsdConfig validate_config(const RawConfig& raw);

/// Range-checks an already-typed config.
void check_config(const UsdConfig& cfg);

/// Inverse of validate_config: every field, rendered so that parsing it back
/// yields an identical config.
RawConfig to_raw(const UsdConfig& cfg);

std::string to_string(EntropyNormalization n);

/// Returns the request unchanged if it is well formed; throws ValidationError
/// with a specific diagnostic otherwise.
const DecodeRequest& validate_request(const DecodeRequest& req);

// ---------------------------------------------------------------------------
// Clustering / scoring results
// ---------------------------------------------------------------------------

struct SemanticCluster {
    std::vector<CandidateItem> members;  // ordered by ItemId
    double mass = 0.0;

    std::size_t size() const { return members.size(); }
};

struct ClusterSet {
    std::vector<SemanticCluster> clusters;  // ordered by smallest member id
    double entropy = 0.0;

    /// Index of the cluster containing `id`, or nullopt.
    std::optional<std::size_t> find(const ItemId& id) const;
};

struct ScoredItem {
    ItemId id;
    double base_prob = 0.0;
    double phi = 0.0;
    double score = 0.0;
    std::size_t cluster_index = 0;
};

struct RankedList {
    std::string request_id;
    std::vector<ScoredItem> items;
    double effective_temperature = 1.0;
};

/// Score descending, ItemId ascending on ties.
bool ranks_before(const ScoredItem& a, const ScoredItem& b);
void sort_ranking(std::vector<ScoredItem>& items);

}  // namespace usd

template <>
struct std::hash<usd::ItemId> {
    std::size_t operator()(const usd::ItemId& id) const noexcept {
        return std::hash<std::string>{}(id.value);
    }
};
