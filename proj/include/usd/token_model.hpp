#pragma once
// Toy autoregressive item model: each catalog item is a fixed-length token
// sequence, and the model supplies p(token | prefix) at every position.
// This is what beam search needs and the flat candidate dumps lack.

#include "usd/model.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

namespace usd::synth {

using TokenPath = std::vector<int>;

class TokenFactoredModel {
public:
    TokenFactoredModel(int depth, int alphabet_size);

    int depth() const { return depth_; }
    int alphabet_size() const { return alphabet_; }

    /// Sets p(. | prefix). `probs` must have alphabet_size entries summing to
    /// one within 1e-9.
    void set_table(const TokenPath& prefix, std::vector<double> probs);

    /// p(. | prefix); throws InvariantError if the prefix has no table.
    const std::vector<double>& table(const TokenPath& prefix) const;

    void add_item(const TokenPath& path, ItemId id);
    std::optional<ItemId> item_at(const TokenPath& path) const;
    const std::map<TokenPath, ItemId>& catalog() const { return catalog_; }
    const std::map<TokenPath, std::vector<double>>& tables() const { return tables_; }

    /// Product of per-step conditionals along a complete path.
    double path_probability(const TokenPath& path) const;

    /// Throws InvariantError unless every prefix of length < depth has a valid
    /// table and catalog paths are unique and full length.
    void check() const;

private:
    int depth_;
    int alphabet_;
    std::map<TokenPath, std::vector<double>> tables_;
    std::map<TokenPath, ItemId> catalog_;
};

/// Random toy model with Dirichlet-like tables. `catalog_fraction` in (0,1]
/// controls how many of the alphabet^depth paths name real items.
TokenFactoredModel make_random_token_model(int depth, int alphabet_size, double catalog_fraction,
                                           std::uint64_t seed);

/// Factors a request's candidate distribution into tokens: candidates (sorted
/// by id) get fixed-length base-`alphabet_size` codes and each conditional
/// table is the candidate mass under prefix+token divided by the mass under
/// prefix. Prefixes with no candidate mass get a uniform table, so beams
/// through them end on paths outside the catalog.
TokenFactoredModel factor_candidates(const DecodeRequest& req, int alphabet_size);

}  // namespace usd::synth
