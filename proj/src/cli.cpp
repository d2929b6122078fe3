#include "usd/cli.hpp"

#include "usd/baselines.hpp"
#include "usd/clustering.hpp"
#include "usd/decoder.hpp"
#include "usd/eval.hpp"
#include "usd/io.hpp"
#include "usd/parallel.hpp"
#include "usd/synth.hpp"
#include "usd/version.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdlib>
#include <ostream>
#include <sstream>

namespace usd::cli {

namespace {

using io::json;
namespace fs = std::filesystem;

constexpr const char* kSeedEnv = "USD_SEED";

struct Common {
    std::string input;
    std::string config;
    unsigned jobs = 1;
};

struct StrategyFlags {
    double top_p = 0.9;
    int beam_width = 5;
    int n = 10;
};

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(' ');
        const auto e = item.find_last_not_of(' ');
        if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
    }
    return out;
}

std::vector<int> parse_ks(const std::string& text) {
    std::vector<int> ks;
    for (const auto& s : split_list(text)) {
        try {
            std::size_t used = 0;
            const int k = std::stoi(s, &used);
            if (used != s.size() || k < 1) throw std::invalid_argument(s);
            ks.push_back(k);
        } catch (const std::exception&) {
            throw UsageError(fmt::format("--k: invalid cutoff '{}'", s));
        }
    }
    if (ks.empty()) throw UsageError("--k: no cutoffs given");
    return ks;
}

std::optional<std::uint64_t> env_seed() {
    const char* v = std::getenv(kSeedEnv);
    if (!v || !*v) return std::nullopt;
    try {
        std::size_t used = 0;
        const auto s = std::stoull(v, &used);
        if (used != std::string(v).size()) throw std::invalid_argument(v);
        return s;
    } catch (const std::exception&) {
        throw UsageError(fmt::format("{} is not an unsigned integer: '{}'", kSeedEnv, v));
    }
}

// Raw config from file (if any); the environment seed applies only when the
// file does not set one.
RawConfig load_raw_config(const std::string& path) {
    RawConfig raw = path.empty() ? RawConfig{} : io::read_config_file(path);
    if (!raw.count("seed")) {
        if (auto s = env_seed()) raw["seed"] = std::to_string(*s);
    }
    return raw;
}

baselines::StrategySpec make_spec(baselines::StrategyKind kind, const StrategyFlags& flags) {
    auto spec = baselines::default_spec(kind);
    if (kind == baselines::StrategyKind::beam) spec.width_or_n = flags.beam_width;
    if (kind == baselines::StrategyKind::best_of_n || kind == baselines::StrategyKind::self_consistency) {
        spec.width_or_n = flags.n;
    }
    spec.top_p = flags.top_p;
    baselines::check_spec(spec);
    return spec;
}

json config_json(const UsdConfig& cfg) {
    json j = json::object();
    for (const auto& [k, v] : to_raw(cfg)) j[k] = v;
    return j;
}

struct ManifestScope {
    io::RunManifest manifest;

    ManifestScope(std::string command, const UsdConfig& cfg) {
        manifest.command = std::move(command);
        manifest.config = config_json(cfg);
        manifest.seed = cfg.seed;
        manifest.started_at = io::utc_timestamp();
    }

    std::string add_input(const std::string& path) {
        auto text = io::read_file(path);
        manifest.inputs.emplace_back(path, io::digest(text));
        return text;
    }

    void write(const fs::path& dir) {
        manifest.finished_at = io::utc_timestamp();
        io::write_file_atomic(dir / "manifest.json", io::manifest_to_json(manifest).dump(2) + "\n");
    }
};

std::string command_line(const std::vector<std::string>& args) {
    std::string s = "usd";
    for (const auto& a : args) s += " " + a;
    return s;
}

// --- decode -----------------------------------------------------------------

int cmd_decode(const Common& common, const std::string& output, const std::string& strategy_name,
               const StrategyFlags& flags, bool dump_similarity, const std::string& cmdline, std::ostream& out) {
    const auto cfg = validate_config(load_raw_config(common.config));
    const auto spec = make_spec(baselines::parse_strategy(strategy_name), flags);
    ManifestScope scope(cmdline, cfg);
    const auto requests = io::parse_requests(scope.add_input(common.input));

    std::vector<json> records(requests.size());
    std::vector<json> similarity(dump_similarity ? requests.size() : 0);
    const auto ranker = spec.kind == baselines::StrategyKind::usd ? eval::Ranker{} : eval::make_ranker(spec, cfg);
    parallel_for(requests.size(), common.jobs, [&](std::size_t i) {
        const auto& req = requests[i];
        if (spec.kind == baselines::StrategyKind::usd) {
            const auto result = decoder::decode(req, cfg);
            records[i] = io::result_to_json(result.ranking, &result.clusters);
        } else {
            records[i] = io::result_to_json(ranker(req), nullptr);
        }
        if (dump_similarity) {
            auto items = req.candidates;
            std::sort(items.begin(), items.end(),
                      [](const CandidateItem& a, const CandidateItem& b) { return a.id < b.id; });
            const auto m = clustering::similarity_matrix(items);
            json ids = json::array();
            for (const auto& c : items) ids.push_back(c.id.value);
            json rows = json::array();
            for (std::size_t r = 0; r < m.n; ++r) {
                rows.push_back(std::vector<double>(m.values.begin() + static_cast<std::ptrdiff_t>(r * m.n),
                                                   m.values.begin() + static_cast<std::ptrdiff_t>((r + 1) * m.n)));
            }
            similarity[i] = {{"request_id", req.request_id}, {"ids", std::move(ids)}, {"similarity", std::move(rows)}};
        }
    });

    const fs::path out_path(output);
    io::write_file_atomic(out_path, io::to_jsonl(records));
    if (dump_similarity) {
        auto sim_path = out_path;
        sim_path += ".similarity.jsonl";
        io::write_file_atomic(sim_path, io::to_jsonl(similarity));
    }
    scope.write(out_path.has_parent_path() ? out_path.parent_path() : fs::path("."));
    out << fmt::format("decoded {} requests -> {}\n", records.size(), output);
    return kExitOk;
}

// --- eval / compare / sweep ---------------------------------------------------

int cmd_eval(const Common& common, const std::string& out_dir, const std::string& strategy_name,
             const StrategyFlags& flags, const std::string& ks_text, const std::string& cmdline, std::ostream& out) {
    const auto cfg = validate_config(load_raw_config(common.config));
    const auto spec = make_spec(baselines::parse_strategy(strategy_name), flags);
    const auto ks = parse_ks(ks_text);
    ManifestScope scope(cmdline, cfg);
    const auto requests = io::parse_requests(scope.add_input(common.input));

    const auto report = eval::evaluate(requests, spec, cfg, ks, common.jobs);
    const fs::path dir(out_dir);
    const auto table = eval::format_table({report});
    io::write_file_atomic(dir / "report.json", io::report_to_json(report).dump(2) + "\n");
    io::write_file_atomic(dir / "report.txt", table);
    scope.write(dir);
    out << table;
    return kExitOk;
}

int cmd_compare(const Common& common, const std::string& out_dir, const std::string& strategies_text,
                const StrategyFlags& flags, const std::string& ks_text, const std::string& cmdline, std::ostream& out,
                std::ostream& err) {
    const auto cfg = validate_config(load_raw_config(common.config));
    const auto ks = parse_ks(ks_text);

    std::vector<baselines::StrategySpec> specs;
    for (const auto& name : split_list(strategies_text)) {
        const auto spec = make_spec(baselines::parse_strategy(name), flags);
        if (std::find(specs.begin(), specs.end(), spec) != specs.end()) {
            err << fmt::format("warning: duplicate strategy '{}' ignored\n", name);
            continue;
        }
        specs.push_back(spec);
    }
    if (specs.empty()) throw UsageError("--strategies: no strategies given");

    ManifestScope scope(cmdline, cfg);
    const auto requests = io::parse_requests(scope.add_input(common.input));

    std::vector<eval::EvalReport> reports;
    json all = json::array();
    for (const auto& spec : specs) {
        reports.push_back(eval::evaluate(requests, spec, cfg, ks, common.jobs));
        all.push_back(io::report_to_json(reports.back()));
    }
    const fs::path dir(out_dir);
    const auto table = eval::format_table(reports);
    io::write_file_atomic(dir / "compare.json", all.dump(2) + "\n");
    io::write_file_atomic(dir / "compare.txt", table);
    scope.write(dir);
    out << table;
    return kExitOk;
}

int cmd_sweep(const Common& common, const std::string& out_dir, const std::string& param,
              const std::string& values_text, const std::string& ks_text, const std::string& cmdline,
              std::ostream& out) {
    static const std::vector<std::string> kParams{"alpha", "beta", "sim_threshold", "gamma"};
    if (std::find(kParams.begin(), kParams.end(), param) == kParams.end()) {
        throw UsageError(fmt::format("--param must be one of alpha, beta, sim_threshold, gamma (got '{}')", param));
    }
    const auto ks = parse_ks(ks_text);
    const auto values = split_list(values_text);
    if (values.empty()) throw UsageError("--values: no values given");

    const auto base_raw = load_raw_config(common.config);
    std::vector<UsdConfig> configs;
    for (const auto& v : values) {
        auto raw = base_raw;
        raw[param] = v;
        configs.push_back(validate_config(raw));  // rejects before any run
    }

    ManifestScope scope(cmdline, validate_config(base_raw));
    const auto requests = io::parse_requests(scope.add_input(common.input));

    const fs::path dir(out_dir);
    std::string csv = "param,value";
    for (int k : ks) csv += fmt::format(",hr@{0},ndcg@{0},mrr@{0}", k);
    csv += "\n";
    std::vector<eval::EvalReport> reports;
    for (std::size_t i = 0; i < values.size(); ++i) {
        auto report = eval::evaluate(requests, baselines::default_spec(baselines::StrategyKind::usd), configs[i], ks,
                                     common.jobs);
        report.strategy = fmt::format("usd({}={})", param, values[i]);
        io::write_file_atomic(dir / fmt::format("report_{}_{}.json", param, values[i]),
                              io::report_to_json(report).dump(2) + "\n");
        csv += fmt::format("{},{}", param, values[i]);
        for (int k : ks) {
            const auto& m = report.per_k.at(k);
            csv += fmt::format(",{},{},{}", m.hr, m.ndcg, m.mrr);
        }
        csv += "\n";
        reports.push_back(std::move(report));
    }
    io::write_file_atomic(dir / "sweep.csv", csv);
    scope.write(dir);
    out << eval::format_table(reports);
    return kExitOk;
}

// --- synth ------------------------------------------------------------------

int cmd_synth(const std::string& spec_path, synth::SynthSpec spec, const std::string& regime, bool seed_given,
              const std::string& out_dir, const std::string& cmdline, std::ostream& out) {
    io::RunManifest manifest;
    manifest.command = cmdline;
    manifest.started_at = io::utc_timestamp();
    if (!spec_path.empty()) {
        const auto text = io::read_file(spec_path);
        manifest.inputs.emplace_back(spec_path, io::digest(text));
        json j;
        try {
            j = json::parse(text);
        } catch (const json::parse_error& e) {
            throw ValidationError(fmt::format("{}: malformed JSON: {}", spec_path, e.what()));
        }
        spec = io::spec_from_json(j);
    } else {
        spec.regime = synth::parse_regime(regime);
        if (!seed_given) {
            if (auto s = env_seed()) spec.seed = *s;
        }
        synth::check_spec(spec);
    }

    const auto corpus = synth::generate_corpus(spec);
    const fs::path dir(out_dir);
    io::write_corpus(dir, corpus);
    io::write_file_atomic(dir / "spec.json", io::spec_to_json(spec).dump(2) + "\n");

    manifest.config = io::spec_to_json(spec);
    manifest.seed = spec.seed;
    manifest.finished_at = io::utc_timestamp();
    io::write_file_atomic(dir / "manifest.json", io::manifest_to_json(manifest).dump(2) + "\n");

    std::size_t holds = 0;
    for (const auto& r : corpus.requests) holds += r.regime_holds ? 1 : 0;
    out << fmt::format("wrote {} catalog items, {} sequences, {} requests ({} satisfy their regime) -> {}\n",
                       corpus.catalog.items.size(), corpus.interactions.size(), corpus.requests.size(), holds,
                       out_dir);
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Uncertainty-aware semantic decoding for next-item recommendation", "usd"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    Common common;
    StrategyFlags flags;
    std::string output, out_dir, strategy = "usd", strategies = "usd,greedy", ks = "3,5", param, values;
    std::string spec_path, regime = "usd_wins";
    bool dump_similarity = false;
    synth::SynthSpec synth_spec;

    const auto add_common = [&](CLI::App* sub, bool config) {
        sub->add_option("--input", common.input, "Candidate dump (JSONL)")->required()->check(CLI::ExistingFile);
        if (config) sub->add_option("--config", common.config, "Config file (key = value)")->check(CLI::ExistingFile);
        sub->add_option("--jobs", common.jobs, "Worker threads (never changes results)")
            ->check(CLI::Range(1u, 1024u));
    };
    const auto add_strategy_flags = [&](CLI::App* sub) {
        sub->add_option("--top-p", flags.top_p, "Nucleus mass");
        sub->add_option("--beam-width", flags.beam_width, "Beam width");
        sub->add_option("--n", flags.n, "Samples for best-of-N / self-consistency");
    };

    auto* decode = app.add_subcommand("decode", "Rank every request of a candidate dump");
    add_common(decode, true);
    decode->add_option("--output", output, "Output JSONL")->required();
    decode->add_option("--strategy", strategy, "usd, greedy, beam, nucleus, best_of_n, self_consistency");
    decode->add_flag("--dump-similarity", dump_similarity, "Also write per-request similarity matrices");
    add_strategy_flags(decode);

    auto* evalc = app.add_subcommand("eval", "HR/NDCG/MRR of one strategy");
    add_common(evalc, true);
    evalc->add_option("--strategy", strategy, "Strategy name");
    evalc->add_option("--k", ks, "Comma-separated cutoffs");
    evalc->add_option("--out", out_dir, "Report directory")->required();
    add_strategy_flags(evalc);

    auto* compare = app.add_subcommand("compare", "Side-by-side metrics of several strategies");
    add_common(compare, true);
    compare->add_option("--strategies", strategies, "Comma-separated strategy names");
    compare->add_option("--k", ks, "Comma-separated cutoffs");
    compare->add_option("--out", out_dir, "Report directory")->required();
    add_strategy_flags(compare);

    auto* sweep = app.add_subcommand("sweep", "Evaluate USD over values of one hyperparameter");
    add_common(sweep, true);
    sweep->add_option("--param", param, "alpha, beta, sim_threshold or gamma")->required();
    sweep->add_option("--values", values, "Comma-separated values")->required();
    sweep->add_option("--k", ks, "Comma-separated cutoffs");
    sweep->add_option("--out", out_dir, "Report directory")->required();

    auto* synthc = app.add_subcommand("synth", "Generate a synthetic corpus");
    synthc->add_option("--spec", spec_path, "Synth spec JSON")->check(CLI::ExistingFile);
    synthc->add_option("--users", synth_spec.n_users);
    synthc->add_option("--items", synth_spec.n_items);
    synthc->add_option("--groups", synth_spec.n_groups);
    synthc->add_option("--intra-sim", synth_spec.intra_group_sim_target);
    synthc->add_option("--inter-cap", synth_spec.inter_group_sim_cap);
    synthc->add_option("--sim-threshold", synth_spec.sim_threshold);
    synthc->add_option("--dim", synth_spec.logit_dim);
    synthc->add_option("--concentration", synth_spec.markov_concentration);
    synthc->add_option("--length", synth_spec.sequence_length);
    synthc->add_option("--regime", regime, "usd_wins, distinct, weak or mixed");
    auto* seed_opt = synthc->add_option("--seed", synth_spec.seed);
    synthc->add_option("--out", out_dir, "Corpus directory")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForVersion& e) {
        out << kVersion << "\n";
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    }

    const auto cmdline = command_line(args);
    try {
        if (decode->parsed()) return cmd_decode(common, output, strategy, flags, dump_similarity, cmdline, out);
        if (evalc->parsed()) return cmd_eval(common, out_dir, strategy, flags, ks, cmdline, out);
        if (compare->parsed()) {
            if (compare->count("--k") == 0) ks = "1,3,5";
            return cmd_compare(common, out_dir, strategies, flags, ks, cmdline, out, err);
        }
        if (sweep->parsed()) {
            if (sweep->count("--k") == 0) ks = "1,3,5";
            return cmd_sweep(common, out_dir, param, values, ks, cmdline, out);
        }
        if (synthc->parsed()) {
            return cmd_synth(spec_path, synth_spec, regime, seed_opt->count() > 0, out_dir, cmdline, out);
        }
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const fs::filesystem_error& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const InvariantError& e) {
        err << "internal error: " << e.what() << "\n";
        return kExitInternal;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
    return kExitUsage;
}

}  // namespace usd::cli
