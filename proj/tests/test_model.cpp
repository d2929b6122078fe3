#include "oracles.hpp"
#include "usd/io.hpp"
#include "usd/model.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace usd;

TEST_SUITE("model") {
    TEST_CASE("empty config yields the published defaults") {
        const auto cfg = validate_config({});
        CHECK(cfg.sim_threshold == 0.8);
        CHECK(cfg.alpha == 0.5);
        CHECK(cfg.beta == 0.3);
        CHECK(cfg.gamma == 0.5);
        CHECK(cfg.base_temperature == 0.95);
        CHECK(cfg.k_candidates == 10);
        CHECK(cfg.entropy_normalization == EntropyNormalization::none);
        CHECK(cfg.enable_clustering);
        CHECK(cfg.enable_uncertainty);
    }

    TEST_CASE("out-of-range values name the field") {
        CHECK_THROWS_WITH_AS(validate_config({{"alpha", "1.5"}}), "alpha out of [0,1]", ValidationError);
        CHECK_THROWS_WITH_AS(validate_config({{"beta", "-0.1"}}), "beta out of [0,1]", ValidationError);
        CHECK_THROWS_WITH_AS(validate_config({{"sim_threshold", "2"}}), "sim_threshold out of [0,1]",
                             ValidationError);
        CHECK_THROWS_AS(validate_config({{"gamma", "-1"}}), ValidationError);
        CHECK_THROWS_AS(validate_config({{"base_temperature", "0"}}), ValidationError);
        CHECK_THROWS_AS(validate_config({{"k_candidates", "0"}}), ValidationError);
        CHECK_THROWS_AS(validate_config({{"alpha", "nan"}}), ValidationError);
        CHECK_THROWS_AS(validate_config({{"alpha", "0.5x"}}), ValidationError);
        CHECK_THROWS_AS(validate_config({{"entropy_normalization", "log2"}}), ValidationError);
        CHECK_THROWS_AS(validate_config({{"entropy_log_base", "2"}}), ValidationError);
    }

    TEST_CASE("unknown key is reported") {
        CHECK_THROWS_WITH_AS(validate_config({{"alpah", "0.1"}}), "unknown config key: alpah", ValidationError);
    }

    TEST_CASE("boundary values are admitted") {
        const auto cfg = validate_config({{"alpha", "0"}, {"beta", "0"}, {"gamma", "0"}});
        CHECK(cfg.alpha == 0.0);
        CHECK(cfg.beta == 0.0);
        CHECK(cfg.gamma == 0.0);
        CHECK_NOTHROW(validate_config({{"alpha", "1"}, {"beta", "1"}, {"sim_threshold", "1"}}));
    }

    TEST_CASE("config round-trips through its text form") {
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (int trial = 0; trial < 200; ++trial) {
            UsdConfig cfg;
            cfg.sim_threshold = unit(rng);
            cfg.alpha = unit(rng);
            cfg.beta = unit(rng);
            cfg.gamma = 5.0 * unit(rng);
            cfg.base_temperature = 0.01 + 3.0 * unit(rng);
            cfg.k_candidates = 1 + static_cast<int>(rng() % 50);
            cfg.entropy_normalization = rng() % 2 ? EntropyNormalization::log_m : EntropyNormalization::none;
            cfg.enable_clustering = rng() % 2;
            cfg.enable_uncertainty = rng() % 2;
            cfg.seed = rng();
            const auto text = io::format_config(cfg);
            CHECK(validate_config(io::parse_config_text(text)) == cfg);
        }
    }

    TEST_CASE("valid request passes through unchanged") {
        DecodeRequest req{"r1", {ItemId("h")}, {}, std::nullopt};
        for (int i = 0; i < 3; ++i) {
            req.candidates.push_back(oracle::item("c" + std::to_string(i), std::vector<double>(8, 1.0 + i), 0.3));
        }
        CHECK(&validate_request(req) == &req);
    }

    TEST_CASE("request diagnostics are distinct") {
        const auto base = [] {
            DecodeRequest req;
            req.request_id = "r";
            req.candidates = {oracle::item("a", std::vector<double>(8, 1.0), 0.5),
                              oracle::item("b", std::vector<double>(8, 2.0), 0.5)};
            return req;
        };

        DecodeRequest empty;
        empty.request_id = "r";
        CHECK_THROWS_WITH_AS(validate_request(empty), "r: empty candidates", ValidationError);

        auto mixed = base();
        mixed.candidates.push_back(oracle::item("c", std::vector<double>(16, 1.0), 0.1));
        CHECK_THROWS_WITH_AS(validate_request(mixed), doctest::Contains("inconsistent logit dimension"),
                             ValidationError);

        auto dup = base();
        dup.candidates[1].id = ItemId("a");
        CHECK_THROWS_WITH_AS(validate_request(dup), doctest::Contains("duplicate item id"), ValidationError);

        auto zero = base();
        zero.candidates[0].logits = LogitVector(std::vector<double>(8, 0.0));
        CHECK_THROWS_WITH_AS(validate_request(zero), doctest::Contains("zero-norm logit vector"), ValidationError);

        auto nonfinite = base();
        nonfinite.candidates[1].logits.values[3] = std::nan("");
        CHECK_THROWS_WITH_AS(validate_request(nonfinite), doctest::Contains("non-finite logit entry"),
                             ValidationError);

        auto badprob = base();
        badprob.candidates[0].prob = 0.0;
        CHECK_THROWS_WITH_AS(validate_request(badprob), doctest::Contains("probability out of (0,1]"),
                             ValidationError);
        badprob.candidates[0].prob = 1.5;
        CHECK_THROWS_AS(validate_request(badprob), ValidationError);
    }

    TEST_CASE("ranking order: score descending, id ascending on ties") {
        std::vector<ScoredItem> items{{ItemId("b"), 0, 0, 0.5, 0}, {ItemId("a"), 0, 0, 0.5, 0},
                                      {ItemId("c"), 0, 0, 0.9, 0}};
        sort_ranking(items);
        CHECK(items[0].id.value == "c");
        CHECK(items[1].id.value == "a");
        CHECK(items[2].id.value == "b");
    }
}
