#pragma once
// File formats: key = value config files, JSONL requests and results,
// evaluation reports, synthetic corpora and run manifests.

#include "usd/decoder.hpp"
#include "usd/eval.hpp"
#include "usd/model.hpp"
#include "usd/synth.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace usd::io {

using nlohmann::json;
namespace fs = std::filesystem;

/// Data-format error carrying the 1-based line number when known.
struct ParseError : ValidationError {
    ParseError(const std::string& what, std::size_t line)
        : ValidationError(line ? "line " + std::to_string(line) + ": " + what : what), line_number(line) {}
    std::size_t line_number;
};

// --- config -----------------------------------------------------------------

/// `key = value` lines; `#` starts a comment; blank lines ignored.
RawConfig parse_config_text(const std::string& text);
RawConfig read_config_file(const fs::path& path);
std::string format_config(const UsdConfig& cfg);

// --- requests ---------------------------------------------------------------

DecodeRequest request_from_json(const json& j);
json request_to_json(const DecodeRequest& req);

/// Parses and validates every line; blank lines are skipped. Errors cite the
/// offending line.
std::vector<DecodeRequest> parse_requests(const std::string& text);
std::vector<DecodeRequest> read_requests(const fs::path& path);

// --- outputs ----------------------------------------------------------------

/// Per-request record: request_id, effective_temperature, entropy, clusters,
/// ranking. Baseline strategies have no clusters and a null entropy.
json result_to_json(const RankedList& ranking, const ClusterSet* clusters);
json report_to_json(const eval::EvalReport& report);

std::string to_jsonl(const std::vector<json>& records);

// --- corpora ----------------------------------------------------------------

json spec_to_json(const synth::SynthSpec& spec);
synth::SynthSpec spec_from_json(const json& j);

/// catalog.jsonl, interactions.jsonl, candidates.jsonl under `dir`.
void write_corpus(const fs::path& dir, const synth::Corpus& corpus);

// --- files ------------------------------------------------------------------

std::string read_file(const fs::path& path);

/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const fs::path& path, const std::string& contents);

/// Hex FNV-1a digest of file contents.
std::string digest(const std::string& contents);

struct RunManifest {
    std::string command;
    json config;
    std::vector<std::pair<std::string, std::string>> inputs;  // path, digest
    std::uint64_t seed = 0;
    std::string started_at;
    std::string finished_at;
};

std::string utc_timestamp();
json manifest_to_json(const RunManifest& m);

}  // namespace usd::io
