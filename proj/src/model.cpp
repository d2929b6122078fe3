#include "usd/model.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <unordered_set>

namespace usd {

double LogitVector::norm() const {
    double sum = 0.0;
    for (double v : values) sum += v * v;
    return std::sqrt(sum);
}

namespace {

double parse_real(const std::string& key, const std::string& text) {
    const char* begin = text.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0' || !std::isfinite(v)) {
        throw ValidationError(fmt::format("{}: not a finite number: '{}'", key, text));
    }
    return v;
}

std::int64_t parse_int(const std::string& key, const std::string& text) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw ValidationError(fmt::format("{}: not an integer: '{}'", key, text));
    }
    return v;
}

std::uint64_t parse_u64(const std::string& key, const std::string& text) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw ValidationError(fmt::format("{}: not an unsigned 64-bit integer: '{}'", key, text));
    }
    return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
    if (text == "true" || text == "1") return true;
    if (text == "false" || text == "0") return false;
    throw ValidationError(fmt::format("{}: expected true/false, got '{}'", key, text));
}

EntropyNormalization parse_normalization(const std::string& text) {
    if (text == "none") return EntropyNormalization::none;
    if (text == "log_m") return EntropyNormalization::log_m;
    throw ValidationError(
        fmt::format("entropy_normalization: expected none or log_m, got '{}'", text));
}

void require_unit(const char* name, double v) {
    if (!(v >= 0.0 && v <= 1.0)) throw ValidationError(fmt::format("{} out of [0,1]", name));
}

}  // namespace

std::string to_string(EntropyNormalization n) {
    return n == EntropyNormalization::log_m ? "log_m" : "none";
}

void check_config(const UsdConfig& cfg) {
    require_unit("sim_threshold", cfg.sim_threshold);
    require_unit("alpha", cfg.alpha);
    require_unit("beta", cfg.beta);
    if (!(cfg.gamma >= 0.0) || !std::isfinite(cfg.gamma)) {
        throw ValidationError("gamma must be >= 0");
    }
    if (!(cfg.base_temperature > 0.0) || !std::isfinite(cfg.base_temperature)) {
        throw ValidationError("base_temperature must be > 0");
    }
    if (cfg.k_candidates < 1) throw ValidationError("k_candidates must be >= 1");
}

UsdConfig validate_config(const RawConfig& raw) {
    UsdConfig cfg;
    for (const auto& [key, value] : raw) {
        if (key == "sim_threshold") {
            cfg.sim_threshold = parse_real(key, value);
        } else if (key == "alpha") {
            cfg.alpha = parse_real(key, value);
        } else if (key == "beta") {
            cfg.beta = parse_real(key, value);
        } else if (key == "gamma") {
            cfg.gamma = parse_real(key, value);
        } else if (key == "base_temperature") {
            cfg.base_temperature = parse_real(key, value);
        } else if (key == "k_candidates") {
            auto k = parse_int(key, value);
            if (k < 1 || k > 1'000'000) throw ValidationError("k_candidates must be >= 1");
            cfg.k_candidates = static_cast<int>(k);
        } else if (key == "entropy_log_base") {
            if (value != "e" && value != "natural") {
                throw ValidationError("entropy_log_base is fixed to the natural log ('e')");
            }
        } else if (key == "entropy_normalization") {
            cfg.entropy_normalization = parse_normalization(value);
        } else if (key == "enable_clustering") {
            cfg.enable_clustering = parse_bool(key, value);
        } else if (key == "enable_uncertainty") {
            cfg.enable_uncertainty = parse_bool(key, value);
        } else if (key == "seed") {
            cfg.seed = parse_u64(key, value);
        } else {
            throw ValidationError(fmt::format("unknown config key: {}", key));
        }
    }
    check_config(cfg);
    return cfg;
}

RawConfig to_raw(const UsdConfig& cfg) {
    return {
        {"sim_threshold", fmt::format("{}", cfg.sim_threshold)},
        {"alpha", fmt::format("{}", cfg.alpha)},
        {"beta", fmt::format("{}", cfg.beta)},
        {"gamma", fmt::format("{}", cfg.gamma)},
        {"base_temperature", fmt::format("{}", cfg.base_temperature)},
        {"k_candidates", fmt::format("{}", cfg.k_candidates)},
        {"entropy_log_base", "e"},
        {"entropy_normalization", to_string(cfg.entropy_normalization)},
        {"enable_clustering", cfg.enable_clustering ? "true" : "false"},
        {"enable_uncertainty", cfg.enable_uncertainty ? "true" : "false"},
        {"seed", fmt::format("{}", cfg.seed)},
    };
}

const DecodeRequest& validate_request(const DecodeRequest& req) {
    const auto& rid = req.request_id;
    if (req.candidates.empty()) throw ValidationError(fmt::format("{}: empty candidates", rid));

    const std::size_t dim = req.candidates.front().logits.dim();
    std::unordered_set<ItemId> seen;
    for (const auto& c : req.candidates) {
        if (c.id.empty()) throw ValidationError(fmt::format("{}: empty item id", rid));
        if (!seen.insert(c.id).second) {
            throw ValidationError(fmt::format("{}: duplicate item id '{}'", rid, c.id.value));
        }
        if (c.logits.dim() == 0) {
            throw ValidationError(fmt::format("{}: empty logit vector for '{}'", rid, c.id.value));
        }
        if (c.logits.dim() != dim) {
            throw ValidationError(fmt::format("{}: inconsistent logit dimension ('{}' has {}, expected {})",
                                              rid, c.id.value, c.logits.dim(), dim));
        }
        if (!std::all_of(c.logits.values.begin(), c.logits.values.end(),
                         [](double v) { return std::isfinite(v); })) {
            throw ValidationError(fmt::format("{}: non-finite logit entry for '{}'", rid, c.id.value));
        }
        if (c.logits.norm() == 0.0) {
            throw ValidationError(fmt::format("{}: zero-norm logit vector for '{}'", rid, c.id.value));
        }
        if (!(c.prob > 0.0 && c.prob <= 1.0)) {
            throw ValidationError(fmt::format("{}: probability out of (0,1] for '{}'", rid, c.id.value));
        }
    }
    return req;
}

std::optional<std::size_t> ClusterSet::find(const ItemId& id) const {
    for (std::size_t i = 0; i < clusters.size(); ++i) {
        for (const auto& m : clusters[i].members) {
            if (m.id == id) return i;
        }
    }
    return std::nullopt;
}

bool ranks_before(const ScoredItem& a, const ScoredItem& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
}

void sort_ranking(std::vector<ScoredItem>& items) {
    std::sort(items.begin(), items.end(), ranks_before);
}

}  // namespace usd
