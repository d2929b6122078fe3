#include "usd/token_model.hpp"

#include "usd/sampling.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace usd::synth {

TokenFactoredModel::TokenFactoredModel(int depth, int alphabet_size) : depth_(depth), alphabet_(alphabet_size) {
    if (depth < 1) throw ValidationError("token model depth must be >= 1");
    if (alphabet_size < 2) throw ValidationError("token model alphabet must have >= 2 symbols");
}

void TokenFactoredModel::set_table(const TokenPath& prefix, std::vector<double> probs) {
    if (static_cast<int>(prefix.size()) >= depth_) throw InvariantError("table prefix longer than model depth");
    if (static_cast<int>(probs.size()) != alphabet_) throw InvariantError("table size does not match alphabet");
    const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
    if (std::abs(total - 1.0) > 1e-9) throw InvariantError(fmt::format("conditional table sums to {}", total));
    tables_[prefix] = std::move(probs);
}

const std::vector<double>& TokenFactoredModel::table(const TokenPath& prefix) const {
    auto it = tables_.find(prefix);
    if (it == tables_.end()) throw InvariantError("token model has no table for prefix");
    return it->second;
}

void TokenFactoredModel::add_item(const TokenPath& path, ItemId id) {
    if (static_cast<int>(path.size()) != depth_) throw InvariantError("catalog path must have model depth");
    if (!catalog_.emplace(path, std::move(id)).second) throw InvariantError("duplicate catalog path");
}

std::optional<ItemId> TokenFactoredModel::item_at(const TokenPath& path) const {
    auto it = catalog_.find(path);
    if (it == catalog_.end()) return std::nullopt;
    return it->second;
}

double TokenFactoredModel::path_probability(const TokenPath& path) const {
    double p = 1.0;
    TokenPath prefix;
    for (int token : path) {
        p *= table(prefix)[static_cast<std::size_t>(token)];
        prefix.push_back(token);
    }
    return p;
}

void TokenFactoredModel::check() const {
    // Walk every reachable prefix.
    std::vector<TokenPath> frontier{{}};
    for (int step = 0; step < depth_; ++step) {
        std::vector<TokenPath> next;
        for (const auto& prefix : frontier) {
            const auto& t = table(prefix);
            const double total = std::accumulate(t.begin(), t.end(), 0.0);
            if (std::abs(total - 1.0) > 1e-9) throw InvariantError("conditional table does not sum to 1");
            for (int a = 0; a < alphabet_; ++a) {
                auto p = prefix;
                p.push_back(a);
                next.push_back(std::move(p));
            }
        }
        frontier = std::move(next);
    }
    std::vector<ItemId> ids;
    for (const auto& [path, id] : catalog_) ids.push_back(id);
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
        throw InvariantError("catalog maps two paths to one item");
    }
}

TokenFactoredModel make_random_token_model(int depth, int alphabet_size, double catalog_fraction,
                                           std::uint64_t seed) {
    if (!(catalog_fraction > 0.0 && catalog_fraction <= 1.0)) {
        throw ValidationError("catalog_fraction must be in (0,1]");
    }
    TokenFactoredModel model(depth, alphabet_size);
    std::mt19937_64 rng(mix64(seed));

    std::vector<TokenPath> frontier{{}};
    for (int step = 0; step < depth; ++step) {
        std::vector<TokenPath> next;
        for (const auto& prefix : frontier) {
            // Normalized exponentials of uniforms: flat Dirichlet draws.
            std::vector<double> probs(static_cast<std::size_t>(alphabet_size));
            for (double& p : probs) p = -std::log(1.0 - uniform01(rng));
            const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
            for (double& p : probs) p /= total;
            model.set_table(prefix, std::move(probs));
            for (int a = 0; a < alphabet_size; ++a) {
                auto p = prefix;
                p.push_back(a);
                next.push_back(std::move(p));
            }
        }
        frontier = std::move(next);
    }

    int serial = 0;
    for (const auto& path : frontier) {
        if (uniform01(rng) < catalog_fraction) model.add_item(path, ItemId(fmt::format("tok{:04d}", serial)));
        ++serial;
    }
    if (model.catalog().empty()) model.add_item(frontier.front(), ItemId("tok0000"));
    return model;
}

TokenFactoredModel factor_candidates(const DecodeRequest& req, int alphabet_size) {
    if (alphabet_size < 2) throw ValidationError("token model alphabet must have >= 2 symbols");
    auto items = req.candidates;
    std::sort(items.begin(), items.end(), [](const CandidateItem& a, const CandidateItem& b) { return a.id < b.id; });

    int depth = 1;
    std::size_t capacity = static_cast<std::size_t>(alphabet_size);
    while (capacity < items.size()) {
        capacity *= static_cast<std::size_t>(alphabet_size);
        ++depth;
    }
    TokenFactoredModel model(depth, alphabet_size);

    double total = 0.0;
    for (const auto& c : items) total += c.prob;

    std::map<TokenPath, double> prefix_mass;
    for (std::size_t i = 0; i < items.size(); ++i) {
        TokenPath path(static_cast<std::size_t>(depth));
        std::size_t code = i;
        for (int pos = depth - 1; pos >= 0; --pos) {
            path[static_cast<std::size_t>(pos)] = static_cast<int>(code % static_cast<std::size_t>(alphabet_size));
            code /= static_cast<std::size_t>(alphabet_size);
        }
        model.add_item(path, items[i].id);
        for (int len = 0; len <= depth; ++len) {
            prefix_mass[TokenPath(path.begin(), path.begin() + len)] += items[i].prob / total;
        }
    }

    std::vector<TokenPath> frontier{{}};
    for (int step = 0; step < depth; ++step) {
        std::vector<TokenPath> next;
        for (const auto& prefix : frontier) {
            std::vector<double> probs(static_cast<std::size_t>(alphabet_size), 0.0);
            auto it = prefix_mass.find(prefix);
            if (it == prefix_mass.end() || it->second <= 0.0) {
                std::fill(probs.begin(), probs.end(), 1.0 / alphabet_size);
            } else {
                double sum = 0.0;
                for (int a = 0; a < alphabet_size; ++a) {
                    auto child = prefix;
                    child.push_back(a);
                    auto c = prefix_mass.find(child);
                    probs[static_cast<std::size_t>(a)] = c == prefix_mass.end() ? 0.0 : c->second;
                    sum += probs[static_cast<std::size_t>(a)];
                }
                for (double& p : probs) p /= sum;
            }
            model.set_table(prefix, std::move(probs));
            for (int a = 0; a < alphabet_size; ++a) {
                auto p = prefix;
                p.push_back(a);
                next.push_back(std::move(p));
            }
        }
        frontier = std::move(next);
    }
    return model;
}

}  // namespace usd::synth
