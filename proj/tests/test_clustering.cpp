#include "oracles.hpp"
#include "usd/clustering.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>

using namespace usd;
using namespace usd::clustering;

namespace {

// Three 2-D unit vectors with Sim(a,b) = 0.9, Sim(b,c) = 0.85, Sim(a,c) =
// cos(acos 0.9 + acos 0.85) ~ 0.5371: a chain that only single linkage merges.
std::vector<CandidateItem> chain() {
    const double ab = std::acos(0.9);
    const double bc = std::acos(0.85);
    return {oracle::item("a", {1.0, 0.0}, 0.3), oracle::item("b", {std::cos(ab), std::sin(ab)}, 0.3),
            oracle::item("c", {std::cos(ab + bc), std::sin(ab + bc)}, 0.4)};
}

std::vector<CandidateItem> random_set(std::mt19937_64& rng, std::size_t n, int dim) {
    std::vector<CandidateItem> items;
    std::uniform_real_distribution<double> prob(0.01, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        items.push_back(oracle::item("i" + std::to_string(i), oracle::random_logits(rng, dim), prob(rng)));
    }
    return items;
}

}  // namespace

TEST_SUITE("clustering") {
    TEST_CASE("cosine similarity point values") {
        CHECK(cosine_similarity({1, 0}, {1, 0}) == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(cosine_similarity({1, 0}, {0, 1}) == 0.0);
        // (1,1).(1,0) / (sqrt 2 * 1)
        const double expected = static_cast<double>(oracle::cosine({1, 1}, {1, 0}));
        CHECK(std::abs(cosine_similarity({1, 1}, {1, 0}) - expected) < 1e-15);
        CHECK(std::abs(expected - 0.70710678118654752) < 1e-15);
    }

    TEST_CASE("cosine similarity errors and clamping") {
        CHECK_THROWS_AS(cosine_similarity({1, 0}, {1, 0, 0}), ValidationError);
        CHECK_THROWS_AS(cosine_similarity({0, 0}, {1, 0}), ValidationError);
        const double s = cosine_similarity({1e-3, 3e-3, 7e-3}, {1e-3, 3e-3, 7e-3});
        CHECK(s <= 1.0);
        CHECK(cosine_similarity({1, 2}, {-1, -2}) >= -1.0);
    }

    TEST_CASE("equivalence is a strict inequality") {
        const auto ch = chain();
        CHECK(equivalent(ch[0], ch[1], 0.8));                 // 0.9 > 0.8
        CHECK_FALSE(equivalent(ch[0], ch[1], 0.9 + 1e-12));  // not above
        const auto x = oracle::item("x", {1, 0}, 0.5);
        const auto y = oracle::item("y", {1, 0}, 0.5);
        CHECK_FALSE(equivalent(x, y, 1.0));  // Sim = 1 is not > 1
        CHECK(equivalent(x, y, 0.999999));
        // Sim exactly 0.8: (0.8, 0.6) against (1, 0)
        CHECK_FALSE(equivalent(oracle::item("p", {0.8, 0.6}, 0.5), oracle::item("q", {1, 0}, 0.5), 0.8));
    }

    TEST_CASE("no edges gives singletons") {
        const std::vector<CandidateItem> items{oracle::item("a", {1, 0, 0}, 0.2), oracle::item("b", {0, 1, 0}, 0.3),
                                               oracle::item("c", {0, 0, 1}, 0.5)};
        const auto set = cluster_candidates(items, 0.8);
        CHECK(set.clusters.size() == 3);
    }

    TEST_CASE("chain merges through the middle item") {
        const auto items = chain();
        REQUIRE(static_cast<double>(oracle::cosine(items[0].logits.values, items[2].logits.values)) < 0.8);
        const auto set = cluster_candidates(items, 0.8);
        REQUIRE(set.clusters.size() == 1);
        CHECK(oracle::partition_of(set) == oracle::components(items, 0.8));
        CHECK(set.clusters[0].mass == doctest::Approx(1.0));
    }

    TEST_CASE("identical logits share a cluster") {
        const std::vector<CandidateItem> items{oracle::item("z", {0.3, -1.2}, 0.4), oracle::item("y", {0.3, -1.2}, 0.6)};
        const auto set = cluster_candidates(items, 0.8);
        REQUIRE(set.clusters.size() == 1);
        CHECK(set.clusters[0].size() == 2);
        CHECK(set.clusters[0].members[0].id.value == "y");  // id order
    }

    TEST_CASE("similarity matrix is symmetric with unit diagonal") {
        std::mt19937_64 rng(3);
        const auto items = random_set(rng, 9, 5);
        const auto m = similarity_matrix(items);
        for (std::size_t i = 0; i < m.n; ++i) {
            CHECK(std::abs(m.at(i, i) - 1.0) <= 1e-12);
            for (std::size_t j = 0; j < m.n; ++j) {
                CHECK(m.at(i, j) == m.at(j, i));
                CHECK(m.at(i, j) >= -1.0);
                CHECK(m.at(i, j) <= 1.0);
            }
        }
    }

    TEST_CASE("matches brute-force connected components on random sets") {
        std::mt19937_64 rng(11);
        for (int trial = 0; trial < 300; ++trial) {
            const std::size_t n = 1 + rng() % 12;
            const auto items = random_set(rng, n, 2 + static_cast<int>(rng() % 3));
            for (double tau : {0.5, 0.8, 0.95}) {
                const auto set = cluster_candidates(items, tau);
                REQUIRE(oracle::partition_of(set) == oracle::components(items, tau));
            }
        }
    }

    TEST_CASE("partition, canonical order and permutation invariance") {
        std::mt19937_64 rng(5);
        for (int trial = 0; trial < 100; ++trial) {
            auto items = random_set(rng, 1 + rng() % 12, 3);
            const auto set = cluster_candidates(items, 0.7);

            std::size_t total = 0;
            for (std::size_t c = 0; c < set.clusters.size(); ++c) {
                const auto& members = set.clusters[c].members;
                total += members.size();
                CHECK(std::is_sorted(members.begin(), members.end(),
                                     [](const CandidateItem& a, const CandidateItem& b) { return a.id < b.id; }));
                if (c > 0) CHECK(set.clusters[c - 1].members.front().id < members.front().id);
            }
            CHECK(total == items.size());

            std::shuffle(items.begin(), items.end(), rng);
            const auto again = cluster_candidates(items, 0.7);
            REQUIRE(again.clusters.size() == set.clusters.size());
            for (std::size_t c = 0; c < set.clusters.size(); ++c) {
                CHECK(again.clusters[c].members == set.clusters[c].members);
                CHECK(again.clusters[c].mass == set.clusters[c].mass);
            }
        }
    }

    TEST_CASE("positive rescaling leaves the partition unchanged") {
        std::mt19937_64 rng(9);
        std::uniform_real_distribution<double> scale(1e-3, 1e3);
        for (int trial = 0; trial < 100; ++trial) {
            auto items = random_set(rng, 2 + rng() % 10, 3);
            const auto before = cluster_candidates(items, 0.8);
            auto scaled = items;
            for (auto& c : scaled) {
                const double s = scale(rng);
                for (double& v : c.logits.values) v *= s;
            }
            for (std::size_t i = 0; i < items.size(); ++i) {
                for (std::size_t j = 0; j < items.size(); ++j) {
                    CHECK(std::abs(cosine_similarity(items[i].logits, items[j].logits) -
                                   cosine_similarity(scaled[i].logits, scaled[j].logits)) < 1e-9);
                }
            }
            CHECK(oracle::partition_of(cluster_candidates(scaled, 0.8)) == oracle::partition_of(before));
        }
    }

    TEST_CASE("raising the threshold never reduces the cluster count") {
        std::mt19937_64 rng(13);
        for (int trial = 0; trial < 100; ++trial) {
            const auto items = random_set(rng, 1 + rng() % 12, 2);
            std::size_t previous = 0;
            for (double tau = 0.0; tau <= 1.0; tau += 0.05) {
                const auto count = cluster_candidates(items, tau).clusters.size();
                CHECK(count >= previous);
                previous = count;
            }
        }
    }

    TEST_CASE("negative similarity never links for non-negative thresholds") {
        const std::vector<CandidateItem> items{oracle::item("a", {1, 0}, 0.5), oracle::item("b", {-1, 0}, 0.5)};
        CHECK(cluster_candidates(items, 0.0).clusters.size() == 2);
    }
}
