#include "usd/io.hpp"

#include "usd/sampling.hpp"
#include "usd/version.hpp"

#include <fmt/format.h>

#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>

namespace usd::io {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

const json& field(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) throw ValidationError(fmt::format("missing field '{}'", key));
    return *it;
}

std::string string_field(const json& j, const char* key) {
    const auto& v = field(j, key);
    if (!v.is_string()) throw ValidationError(fmt::format("field '{}' must be a string", key));
    return v.get<std::string>();
}

double number(const json& v, const char* what) {
    if (!v.is_number()) throw ValidationError(fmt::format("{} must be a number", what));
    return v.get<double>();
}

}  // namespace

// --- config -----------------------------------------------------------------

RawConfig parse_config_text(const std::string& text) {
    RawConfig raw;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("expected 'key = value'", lineno);
        auto key = trim(line.substr(0, eq));
        auto value = trim(line.substr(eq + 1));
        if (key.empty()) throw ParseError("empty config key", lineno);
        if (!raw.emplace(key, value).second) throw ParseError(fmt::format("duplicate config key: {}", key), lineno);
    }
    return raw;
}

RawConfig read_config_file(const fs::path& path) {
    return parse_config_text(read_file(path));
}

std::string format_config(const UsdConfig& cfg) {
    std::string out;
    for (const auto& [k, v] : to_raw(cfg)) out += fmt::format("{} = {}\n", k, v);
    return out;
}

// --- requests ---------------------------------------------------------------

DecodeRequest request_from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("request must be a JSON object");
    DecodeRequest req;
    req.request_id = string_field(j, "request_id");

    if (auto it = j.find("history"); it != j.end()) {
        if (!it->is_array()) throw ValidationError("field 'history' must be an array");
        for (const auto& h : *it) {
            if (!h.is_string()) throw ValidationError("history entries must be strings");
            req.history.emplace_back(h.get<std::string>());
        }
    }
    if (auto it = j.find("ground_truth"); it != j.end() && !it->is_null()) {
        if (!it->is_string()) throw ValidationError("field 'ground_truth' must be a string");
        req.ground_truth = ItemId(it->get<std::string>());
    }

    const auto& cands = field(j, "candidates");
    if (!cands.is_array()) throw ValidationError("field 'candidates' must be an array");
    for (const auto& c : cands) {
        if (!c.is_object()) throw ValidationError("candidate must be a JSON object");
        CandidateItem item;
        item.id = ItemId(string_field(c, "id"));
        const auto& logits = field(c, "logits");
        if (!logits.is_array()) throw ValidationError("field 'logits' must be an array");
        item.logits.values.reserve(logits.size());
        for (const auto& v : logits) item.logits.values.push_back(number(v, "logit entry"));
        item.prob = number(field(c, "prob"), "field 'prob'");
        req.candidates.push_back(std::move(item));
    }
    return req;
}

json request_to_json(const DecodeRequest& req) {
    json j;
    j["request_id"] = req.request_id;
    json history = json::array();
    for (const auto& h : req.history) history.push_back(h.value);
    j["history"] = std::move(history);
    if (req.ground_truth) j["ground_truth"] = req.ground_truth->value;
    json cands = json::array();
    for (const auto& c : req.candidates) {
        cands.push_back({{"id", c.id.value}, {"logits", c.logits.values}, {"prob", c.prob}});
    }
    j["candidates"] = std::move(cands);
    return j;
}

std::vector<DecodeRequest> parse_requests(const std::string& text) {
    std::vector<DecodeRequest> out;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(fmt::format("malformed JSON: {}", e.what()), lineno);
        }
        try {
            out.push_back(request_from_json(j));
            validate_request(out.back());
        } catch (const ValidationError& e) {
            throw ParseError(e.what(), lineno);
        }
    }
    return out;
}

std::vector<DecodeRequest> read_requests(const fs::path& path) {
    return parse_requests(read_file(path));
}

// --- outputs ----------------------------------------------------------------

json result_to_json(const RankedList& ranking, const ClusterSet* clusters) {
    json j;
    j["request_id"] = ranking.request_id;
    j["effective_temperature"] = ranking.effective_temperature;
    json groups = json::array();
    if (clusters) {
        j["entropy"] = clusters->entropy;
        for (const auto& c : clusters->clusters) {
            json ids = json::array();
            for (const auto& m : c.members) ids.push_back(m.id.value);
            groups.push_back(std::move(ids));
        }
    } else {
        j["entropy"] = nullptr;
    }
    j["clusters"] = std::move(groups);
    json items = json::array();
    for (const auto& s : ranking.items) {
        items.push_back({{"id", s.id.value},
                         {"score", s.score},
                         {"base_prob", s.base_prob},
                         {"phi", s.phi},
                         {"cluster_index", s.cluster_index}});
    }
    j["ranking"] = std::move(items);
    return j;
}

json report_to_json(const eval::EvalReport& report) {
    json per_k = json::object();
    for (const auto& [k, m] : report.per_k) {
        per_k[std::to_string(k)] = {{"hr", m.hr}, {"ndcg", m.ndcg}, {"mrr", m.mrr}};
    }
    return {
        {"strategy", report.strategy},
        {"kind", baselines::to_string(report.spec.kind)},
        {"width_or_n", report.spec.width_or_n},
        {"top_p", report.spec.top_p},
        {"n_requests", report.n_requests},
        {"per_k", std::move(per_k)},
    };
}

std::string to_jsonl(const std::vector<json>& records) {
    std::string out;
    for (const auto& r : records) {
        out += r.dump();
        out += '\n';
    }
    return out;
}

// --- corpora ----------------------------------------------------------------

json spec_to_json(const synth::SynthSpec& spec) {
    return {
        {"n_users", spec.n_users},
        {"n_items", spec.n_items},
        {"n_groups", spec.n_groups},
        {"intra_group_sim_target", spec.intra_group_sim_target},
        {"inter_group_sim_cap", spec.inter_group_sim_cap},
        {"sim_threshold", spec.sim_threshold},
        {"logit_dim", spec.logit_dim},
        {"markov_concentration", spec.markov_concentration},
        {"sequence_length", spec.sequence_length},
        {"regime", synth::to_string(spec.regime)},
        {"seed", spec.seed},
    };
}

synth::SynthSpec spec_from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("synth spec must be a JSON object");
    synth::SynthSpec spec;
    for (const auto& [key, value] : j.items()) {
        try {
            if (key == "n_users") spec.n_users = value.get<int>();
            else if (key == "n_items") spec.n_items = value.get<int>();
            else if (key == "n_groups") spec.n_groups = value.get<int>();
            else if (key == "intra_group_sim_target") spec.intra_group_sim_target = value.get<double>();
            else if (key == "inter_group_sim_cap") spec.inter_group_sim_cap = value.get<double>();
            else if (key == "sim_threshold") spec.sim_threshold = value.get<double>();
            else if (key == "logit_dim") spec.logit_dim = value.get<int>();
            else if (key == "markov_concentration") spec.markov_concentration = value.get<double>();
            else if (key == "sequence_length") spec.sequence_length = value.get<int>();
            else if (key == "regime") spec.regime = synth::parse_regime(value.get<std::string>());
            else if (key == "seed") spec.seed = value.get<std::uint64_t>();
            else throw ValidationError(fmt::format("unknown synth spec key: {}", key));
        } catch (const json::exception&) {
            throw ValidationError(fmt::format("synth spec key '{}' has the wrong type", key));
        }
    }
    synth::check_spec(spec);
    return spec;
}

void write_corpus(const fs::path& dir, const synth::Corpus& corpus) {
    fs::create_directories(dir);

    std::vector<json> catalog;
    for (const auto& item : corpus.catalog.items) {
        catalog.push_back({{"id", item.id.value}, {"group", item.group}, {"logits", item.logits.values}});
    }
    write_file_atomic(dir / "catalog.jsonl", to_jsonl(catalog));

    std::vector<json> interactions;
    for (const auto& seq : corpus.interactions) {
        json items = json::array();
        for (const auto& id : seq.items) items.push_back(id.value);
        interactions.push_back({{"user_id", seq.user_id}, {"items", std::move(items)}});
    }
    write_file_atomic(dir / "interactions.jsonl", to_jsonl(interactions));

    std::vector<json> dumps;
    for (const auto& labeled : corpus.requests) {
        auto j = request_to_json(labeled.request);
        j["regime"] = synth::to_string(labeled.regime);
        j["regime_holds"] = labeled.regime_holds;
        j["true_group"] = labeled.true_group;
        dumps.push_back(std::move(j));
    }
    write_file_atomic(dir / "candidates.jsonl", to_jsonl(dumps));
}

// --- files ------------------------------------------------------------------

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError(fmt::format("cannot open {}", path.string()));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const fs::path& path, const std::string& contents) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw UsageError(fmt::format("cannot write {}", tmp.string()));
        out << contents;
        out.flush();
        if (!out) throw UsageError(fmt::format("write failed for {}", tmp.string()));
    }
    fs::rename(tmp, path);
}

std::string digest(const std::string& contents) {
    return fmt::format("fnv1a64:{:016x}", fnv1a64(contents));
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

json manifest_to_json(const RunManifest& m) {
    json inputs = json::array();
    for (const auto& [path, dig] : m.inputs) inputs.push_back({{"path", path}, {"digest", dig}});
    return {
        {"command", m.command},
        {"config", m.config},
        {"inputs", std::move(inputs)},
        {"seed", m.seed},
        {"tool_version", kVersion},
        {"started_at", m.started_at},
        {"finished_at", m.finished_at},
    };
}

}  // namespace usd::io
