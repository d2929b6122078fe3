#include "oracles.hpp"
#include "usd/baselines.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

using namespace usd;
using namespace usd::baselines;
using usd::synth::TokenFactoredModel;
using usd::synth::TokenPath;

namespace {

DecodeRequest request(std::vector<std::pair<std::string, double>> probs) {
    DecodeRequest r;
    r.request_id = "r";
    double x = 1.0;
    for (const auto& [id, p] : probs) r.candidates.push_back(oracle::item(id, {x++, 1.0}, p));
    return r;
}

std::vector<std::string> ids(const RankedList& list) {
    std::vector<std::string> out;
    for (const auto& s : list.items) out.push_back(s.id.value);
    return out;
}

// Two-step model over {0,1,2}: the greedy first token (0 at 0.5) leads to a
// flat second step, while token 1 (0.4) leads to a peaked one.
TokenFactoredModel two_step() {
    TokenFactoredModel m(2, 3);
    m.set_table({}, {0.5, 0.4, 0.1});
    m.set_table({0}, {1.0 / 3, 1.0 / 3, 1.0 / 3});
    m.set_table({1}, {0.9, 0.05, 0.05});
    m.set_table({2}, {0.2, 0.3, 0.5});
    for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) m.add_item({a, b}, ItemId("p" + std::to_string(a) + std::to_string(b)));
    }
    return m;
}

}  // namespace

TEST_SUITE("baselines") {
    TEST_CASE("strategy names round-trip and unknown names are usage errors") {
        for (auto k : {StrategyKind::greedy, StrategyKind::beam, StrategyKind::nucleus, StrategyKind::best_of_n,
                       StrategyKind::self_consistency, StrategyKind::usd}) {
            CHECK(parse_strategy(to_string(k)) == k);
        }
        CHECK_THROWS_WITH_AS(parse_strategy("topk"), "unknown strategy: topk", UsageError);
        CHECK(default_spec(StrategyKind::beam).width_or_n == 5);
        CHECK(default_spec(StrategyKind::best_of_n).width_or_n == 10);
        CHECK(default_spec(StrategyKind::nucleus).top_p == 0.9);
    }

    TEST_CASE("greedy ranks by probability with id tie-break") {
        const auto r = greedy_rank(request({{"c", 0.2}, {"a", 0.5}, {"b", 0.3}}), 3);
        CHECK(ids(r) == std::vector<std::string>{"a", "b", "c"});
        CHECK(std::abs(r.items[0].score - 0.5) < 1e-12);

        const auto tie = greedy_rank(request({{"z", 0.4}, {"y", 0.4}, {"x", 0.2}}), 2);
        CHECK(ids(tie) == std::vector<std::string>{"y", "z"});

        const auto one = greedy_rank(request({{"only", 0.3}}), 5);
        REQUIRE(one.items.size() == 1);
        CHECK(one.items[0].score == 1.0);
        CHECK_THROWS_AS(greedy_rank(request({{"a", 0.3}}), 0), ValidationError);
    }

    TEST_CASE("beam width 1 follows the greedy token path") {
        const auto m = two_step();
        const auto r = beam_rank(m, 1, 1);
        REQUIRE(r.ranking.items.size() == 1);
        // First token 0, then the id-smallest of three equal tokens.
        CHECK(r.ranking.items[0].id.value == "p00");
        CHECK(std::abs(r.ranking.items[0].score - 0.5 / 3) < 1e-12);
    }

    TEST_CASE("beam width 2 recovers the globally better path") {
        const auto m = two_step();
        const auto r = beam_rank(m, 2, 2);
        REQUIRE(r.ranking.items.size() == 2);
        // 0.4 * 0.9 = 0.36 beats every path through token 0.
        CHECK(r.ranking.items[0].id.value == "p10");
        CHECK(std::abs(r.ranking.items[0].score - 0.36) < 1e-12);
    }

    TEST_CASE("exhaustive beam equals enumeration") {
        for (std::uint64_t seed = 1; seed <= 30; ++seed) {
            const int depth = 1 + static_cast<int>(seed % 3);
            const int alphabet = 2 + static_cast<int>(seed % 4);
            const auto m = synth::make_random_token_model(depth, alphabet, 0.7, seed);
            const int all = static_cast<int>(std::pow(alphabet, depth));

            auto paths = oracle::enumerate_paths(m);
            std::vector<std::pair<double, std::string>> expected;
            for (const auto& p : paths) {
                if (auto id = m.item_at(p.tokens)) expected.emplace_back(p.prob, id->value);
            }
            std::sort(expected.begin(), expected.end(), [](const auto& a, const auto& b) {
                if (a.first != b.first) return a.first > b.first;
                return a.second < b.second;
            });

            const auto r = beam_rank(m, all, all);
            REQUIRE(r.ranking.items.size() == expected.size());
            CHECK(r.dropped == static_cast<std::size_t>(all) - expected.size());
            for (std::size_t i = 0; i < expected.size(); ++i) {
                CHECK(std::abs(r.ranking.items[i].score - expected[i].first) < 1e-12);
            }
            // Probability order agrees even if equal-probability ids swap.
            CHECK(r.ranking.items.front().score == doctest::Approx(expected.front().first));
        }
    }

    TEST_CASE("paths outside the catalog are dropped and counted") {
        TokenFactoredModel m(1, 3);
        m.set_table({}, {0.6, 0.3, 0.1});
        m.add_item({1}, ItemId("b"));
        const auto r = beam_rank(m, 3, 3);
        CHECK(r.dropped == 2);
        REQUIRE(r.ranking.items.size() == 1);
        CHECK(r.ranking.items[0].id.value == "b");
    }

    TEST_CASE("token model tables and path probabilities") {
        const auto m = synth::make_random_token_model(3, 4, 0.5, 9);
        CHECK_NOTHROW(m.check());
        double total = 0;
        for (const auto& p : oracle::enumerate_paths(m)) {
            total += p.prob;
            CHECK(std::abs(m.path_probability(p.tokens) - p.prob) < 1e-12);
        }
        CHECK(std::abs(total - 1.0) < 1e-9);
        TokenFactoredModel bad(1, 2);
        CHECK_THROWS_AS(bad.set_table({}, {0.6, 0.6}), InvariantError);
    }

    TEST_CASE("factoring candidates preserves their distribution") {
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> u(0.01, 1.0);
        for (int trial = 0; trial < 50; ++trial) {
            DecodeRequest req;
            req.request_id = "f";
            const std::size_t n = 1 + rng() % 20;
            double total = 0;
            for (std::size_t i = 0; i < n; ++i) {
                req.candidates.push_back(oracle::item("c" + std::to_string(i), {1.0, double(i)}, u(rng)));
                total += req.candidates.back().prob;
            }
            const auto m = synth::factor_candidates(req, 4);
            CHECK_NOTHROW(m.check());
            CHECK(m.catalog().size() == n);
            for (const auto& [path, id] : m.catalog()) {
                const auto it = std::find_if(req.candidates.begin(), req.candidates.end(),
                                             [&](const CandidateItem& c) { return c.id == id; });
                REQUIRE(it != req.candidates.end());
                CHECK(std::abs(m.path_probability(path) - it->prob / total) < 1e-12);
            }
            // Exhaustive beam over the factorization is greedy order.
            const auto r = beam_rank(m, static_cast<int>(std::pow(4, m.depth())), static_cast<int>(n));
            CHECK(ids(r.ranking) == ids(greedy_rank(req, static_cast<int>(n))));
        }
    }

    TEST_CASE("nucleus prefix") {
        const auto req = request({{"a", 0.6}, {"b", 0.3}, {"c", 0.1}});
        CHECK(nucleus_prefix(req, 0.6).size() == 1);
        CHECK(nucleus_prefix(req, 0.9).size() == 2);
        CHECK(nucleus_prefix(req, 0.95).size() == 3);
        CHECK(nucleus_prefix(req, 1.0).size() == 3);
        CHECK_THROWS_AS(nucleus_prefix(req, 0.0), ValidationError);

        const auto r = nucleus_rank(req, 0.9, 5, SamplingState::for_request(0, "r"));
        CHECK(ids(r) == std::vector<std::string>{"a", "b"});
    }

    TEST_CASE("nucleus only returns items from the prefix") {
        std::mt19937_64 rng(8);
        std::uniform_real_distribution<double> u(0.01, 1.0);
        for (int trial = 0; trial < 100; ++trial) {
            std::vector<std::pair<std::string, double>> probs;
            for (int i = 0; i < 10; ++i) probs.emplace_back("i" + std::to_string(i), u(rng));
            const auto req = request(probs);
            const double top_p = u(rng);
            const auto prefix = nucleus_prefix(req, top_p);
            const auto r = nucleus_rank(req, top_p, 3, SamplingState{rng(), 1});
            CHECK(r.items.size() == std::min<std::size_t>(3, prefix.size()));
            for (const auto& s : r.items) {
                CHECK(std::any_of(prefix.begin(), prefix.end(), [&](const CandidateItem& c) { return c.id == s.id; }));
            }
        }
    }

    TEST_CASE("best-of-N draws with replacement and ranks by probability") {
        const auto req = request({{"a", 0.4}, {"b", 0.3}, {"c", 0.2}, {"d", 0.1}});
        const auto r = best_of_n_rank(req, 1000, 10, 0.95, SamplingState{5, 1});
        CHECK(ids(r) == std::vector<std::string>{"a", "b", "c", "d"});
        const auto single = best_of_n_rank(req, 1, 10, 0.95, SamplingState{5, 1});
        CHECK(single.items.size() == 1);
        CHECK_THROWS_AS(best_of_n_rank(req, 0, 10, 0.95, SamplingState{}), ValidationError);
    }

    TEST_CASE("self-consistency orders by vote count") {
        const auto req = request({{"a", 0.1}, {"b", 0.7}, {"c", 0.2}});
        const auto r = self_consistency_rank(req, 2000, 3, 1.0, SamplingState{11, 1});
        REQUIRE(!r.items.empty());
        CHECK(r.items[0].id.value == "b");
        double total = 0;
        for (std::size_t i = 0; i < r.items.size(); ++i) {
            total += r.items[i].score;
            if (i > 0) CHECK(r.items[i - 1].score >= r.items[i].score);
        }
        CHECK(std::abs(total - 1.0) < 1e-12);
        // With N = 1 the single vote wins outright.
        const auto one = self_consistency_rank(req, 1, 3, 1.0, SamplingState{11, 1});
        REQUIRE(one.items.size() == 1);
        CHECK(one.items[0].score == 1.0);
    }

    TEST_CASE("self-consistency ties fall back to probability then id") {
        // N = 2 over two equally likely items: whenever both are drawn once,
        // the higher-probability one must lead.
        const auto req = request({{"x", 0.5}, {"y", 0.5}});
        int both = 0;
        for (std::uint64_t s = 0; s < 200; ++s) {
            const auto r = self_consistency_rank(req, 2, 2, 1.0, SamplingState{s, 1});
            if (r.items.size() == 2) {
                ++both;
                CHECK(ids(r) == std::vector<std::string>{"x", "y"});
            }
        }
        CHECK(both > 0);
    }

    TEST_CASE("stochastic baselines are reproducible") {
        std::mt19937_64 rng(2);
        std::uniform_real_distribution<double> u(0.01, 1.0);
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<std::pair<std::string, double>> probs;
            for (int i = 0; i < 8; ++i) probs.emplace_back("i" + std::to_string(i), u(rng));
            const auto req = request(probs);
            const SamplingState st{rng(), 1};
            CHECK(ids(nucleus_rank(req, 0.9, 4, st)) == ids(nucleus_rank(req, 0.9, 4, st)));
            CHECK(ids(best_of_n_rank(req, 10, 4, 0.95, st)) == ids(best_of_n_rank(req, 10, 4, 0.95, st)));
            CHECK(ids(self_consistency_rank(req, 10, 4, 0.95, st)) ==
                  ids(self_consistency_rank(req, 10, 4, 0.95, st)));
        }
    }
}
