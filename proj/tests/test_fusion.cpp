#include <doctest.h>

#include <algorithm>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "raglex/errors.hpp"
#include "raglex/fusion.hpp"
#include "raglex/ref.hpp"

#include "support.hpp"

using namespace raglex;

namespace {

// Five-document worked example: raw retrieval scores from both routes.
RankedList keyword_row() {
    return {{"1", 5.0}, {"0", 2.6}, {"2", 2.3}, {"4", 0.2}, {"3", 0.09}};
}

RankedList vector_row() {
    return {{"2", 0.6}, {"4", 0.598}, {"0", 0.596}, {"1", 0.594}, {"3", 0.009}};
}

RankedList random_ranked(std::mt19937_64& rng, std::size_t max_items) {
    std::uniform_int_distribution<std::size_t> n_dist(1, max_items);
    std::uniform_real_distribution<double> score_dist(0.0, 10.0);
    std::uniform_int_distribution<int> id_dist(0, 30);
    std::unordered_map<std::string, double> picked;
    const std::size_t n = n_dist(rng);
    for (std::size_t i = 0; i < n; ++i)
        picked.emplace("d" + std::to_string(id_dist(rng)), score_dist(rng));
    RankedList list;
    for (const auto& [id, score] : picked) list.push_back({id, score});
    std::sort(list.begin(), list.end(), [](const ScoredHit& a, const ScoredHit& b) {
        return a.score != b.score ? a.score > b.score : a.id < b.id;
    });
    return list;
}

} // namespace

TEST_SUITE("fusion") {

TEST_CASE("min-max normalization reproduces the worked keyword row") {
    const RankedList got = minmax_normalize(keyword_row());
    REQUIRE_EQ(got.size(), 5u);
    CHECK_EQ(got[0].id, "1");
    CHECK_EQ(got[0].score, doctest::Approx(1.0).epsilon(1e-12));
    CHECK_EQ(got[1].id, "0");
    CHECK_EQ(got[1].score, doctest::Approx(0.5112016293279022).epsilon(1e-12));
    CHECK_EQ(got[2].id, "2");
    CHECK_EQ(got[2].score, doctest::Approx(0.45010183299389).epsilon(1e-12));
    CHECK_EQ(got[3].id, "4");
    CHECK_EQ(got[3].score, doctest::Approx(0.02240325865580448).epsilon(1e-12));
    CHECK_EQ(got[4].id, "3");
    CHECK_EQ(got[4].score, 0.0);
}

TEST_CASE("min-max normalization reproduces the worked vector row") {
    const RankedList got = minmax_normalize(vector_row());
    REQUIRE_EQ(got.size(), 5u);
    CHECK_EQ(got[0].id, "2");
    CHECK_EQ(got[0].score, doctest::Approx(1.0).epsilon(1e-12));
    CHECK_EQ(got[1].id, "4");
    CHECK_EQ(got[1].score, doctest::Approx(0.9966159052453468).epsilon(1e-12));
    CHECK_EQ(got[2].id, "0");
    CHECK_EQ(got[2].score, doctest::Approx(0.9932318104906937).epsilon(1e-12));
    CHECK_EQ(got[3].id, "1");
    CHECK_EQ(got[3].score, doctest::Approx(0.9898477157360406).epsilon(1e-12));
    CHECK_EQ(got[4].id, "3");
    CHECK_EQ(got[4].score, 0.0);
}

TEST_CASE("min-max handles degenerate lists") {
    CHECK(minmax_normalize({}).empty());

    const RankedList single = minmax_normalize({{"a", 3.7}});
    REQUIRE_EQ(single.size(), 1u);
    CHECK_EQ(single[0].score, 1.0);

    const RankedList uniform = minmax_normalize({{"a", 2.0}, {"b", 2.0}, {"c", 2.0}});
    for (const ScoredHit& hit : uniform) CHECK_EQ(hit.score, 1.0);
}

TEST_CASE("min-max preserves entry order") {
    std::mt19937_64 rng(71);
    for (int round = 0; round < 40; ++round) {
        const RankedList input = random_ranked(rng, 15);
        const RankedList output = minmax_normalize(input);
        REQUIRE_EQ(output.size(), input.size());
        for (std::size_t i = 0; i < input.size(); ++i) CHECK_EQ(output[i].id, input[i].id);
    }
}

TEST_CASE("weighted fusion reproduces the worked ranking") {
    const RankedList fused = fuse(keyword_row(), vector_row(), {});
    REQUIRE_EQ(fused.size(), 5u);
    const std::vector<std::string> want_order{"1", "0", "2", "4", "3"};
    const std::vector<double> want_scores{0.9949238578680203, 0.752216719909298,
                                          0.725050916496945, 0.5095095819505756, 0.0};
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK_EQ(fused[i].id, want_order[i]);
        CHECK_EQ(fused[i].score, doctest::Approx(want_scores[i]).epsilon(1e-12));
    }
}

TEST_CASE("one-sided weights reduce fusion to that route") {
    std::mt19937_64 rng(73);
    for (int round = 0; round < 25; ++round) {
        const RankedList lexical = random_ranked(rng, 10);
        const RankedList dense = random_ranked(rng, 10);

        FusionConfig lex_only;
        lex_only.w_lexical = 1.0;
        lex_only.w_dense = 0.0;
        const RankedList fused = fuse(lexical, dense, lex_only);
        const RankedList norm = minmax_normalize(lexical);
        std::unordered_map<std::string, double> norm_of;
        for (const ScoredHit& hit : norm) norm_of.emplace(hit.id, hit.score);
        // Every lexical item keeps its normalized score; dense-only items drop to 0.
        for (const ScoredHit& hit : fused) {
            const auto it = norm_of.find(hit.id);
            if (it != norm_of.end())
                CHECK_EQ(hit.score, doctest::Approx(it->second).epsilon(1e-12));
            else
                CHECK_EQ(hit.score, 0.0);
        }
        CHECK_EQ(fused.front().id, norm.front().id);
    }
}

TEST_CASE("an item ranked first on both sides ranks first fused") {
    std::mt19937_64 rng(79);
    for (int round = 0; round < 25; ++round) {
        RankedList lexical = random_ranked(rng, 10);
        RankedList dense = random_ranked(rng, 10);
        lexical.insert(lexical.begin(), {"winner", lexical.empty() ? 1.0 : lexical.front().score + 1.0});
        dense.insert(dense.begin(), {"winner", dense.empty() ? 1.0 : dense.front().score + 1.0});
        const RankedList fused = fuse(lexical, dense, {});
        REQUIRE_FALSE(fused.empty());
        CHECK_EQ(fused.front().id, "winner");
        CHECK_EQ(fused.front().score, doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("a missing side contributes zero") {
    const RankedList fused = fuse({{"only", 4.0}, {"both", 2.0}},
                                  {{"both", 1.0}}, {});
    // "only": 0.5 * 1.0 + 0; "both": 0.5 * 0.0 + 0.5 * 1.0.
    std::unordered_map<std::string, double> scores;
    for (const ScoredHit& hit : fused) scores.emplace(hit.id, hit.score);
    CHECK_EQ(scores.at("only"), doctest::Approx(0.5).epsilon(1e-12));
    CHECK_EQ(scores.at("both"), doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("weighted fusion equals the reference on random inputs") {
    std::mt19937_64 rng(83);
    for (int round = 0; round < 30; ++round) {
        const RankedList lexical = random_ranked(rng, 12);
        const RankedList dense = random_ranked(rng, 12);
        FusionConfig config;
        config.w_lexical = 0.3;
        config.w_dense = 0.7;
        const RankedList got = fuse(lexical, dense, config);
        const RankedList want = ref::fuse_weighted(lexical, dense, 0.3, 0.7);
        REQUIRE_EQ(got.size(), want.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK_EQ(got[i].id, want[i].id);
            CHECK_EQ(got[i].score, doctest::Approx(want[i].score).epsilon(1e-12));
        }
    }
}

TEST_CASE("reciprocal rank fusion reproduces the worked ranking") {
    const RankedList fused = rrf_fuse({keyword_row(), vector_row()}, 60.0);
    REQUIRE_EQ(fused.size(), 5u);
    const std::vector<std::string> want_order{"2", "1", "0", "4", "3"};
    const std::vector<double> want_scores{0.032266458495966696, 0.032018442622950824,
                                          0.03200204813108039, 0.031754032258064516,
                                          0.03076923076923077};
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK_EQ(fused[i].id, want_order[i]);
        CHECK_EQ(fused[i].score, doctest::Approx(want_scores[i]).epsilon(1e-12));
    }
}

TEST_CASE("rank fusion ignores score magnitudes") {
    std::mt19937_64 rng(89);
    for (int round = 0; round < 25; ++round) {
        const RankedList lexical = random_ranked(rng, 12);
        const RankedList dense = random_ranked(rng, 12);
        auto scaled = [](RankedList list) {
            for (ScoredHit& hit : list) hit.score = hit.score * 2.0 + 3.0;
            return list;
        };
        CHECK_EQ(rrf_fuse({lexical, dense}, 60.0),
                 rrf_fuse({scaled(lexical), scaled(dense)}, 60.0));
    }
}

TEST_CASE("identical lists double every rank contribution") {
    const RankedList list{{"a", 9.0}, {"b", 5.0}};
    const RankedList fused = rrf_fuse({list, list}, 60.0);
    REQUIRE_EQ(fused.size(), 2u);
    CHECK_EQ(fused[0].id, "a");
    CHECK_EQ(fused[0].score, doctest::Approx(0.03278688524590164).epsilon(1e-12));
}

TEST_CASE("rank fusion equals the reference on random inputs") {
    std::mt19937_64 rng(97);
    for (int round = 0; round < 30; ++round) {
        const std::vector<RankedList> lists{random_ranked(rng, 12), random_ranked(rng, 12),
                                            random_ranked(rng, 12)};
        const RankedList got = rrf_fuse(lists, 60.0);
        const RankedList want = ref::rrf(lists, 60.0);
        REQUIRE_EQ(got.size(), want.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK_EQ(got[i].id, want[i].id);
            CHECK_EQ(got[i].score, doctest::Approx(want[i].score).epsilon(1e-12));
        }
    }
}

TEST_CASE("chunk rankings collapse to first-appearance article order") {
    const RankedList chunks{{"chunk_A", 0.9}, {"chunk_B", 0.8}, {"chunk_C", 0.7},
                            {"chunk_D", 0.6}};
    const std::unordered_map<std::string, std::string> provenance{
        {"chunk_A", "article_1"},
        {"chunk_B", "article_3"},
        {"chunk_C", "article_1"},
        {"chunk_D", "article_2"}};
    const RankedList articles = chunks_to_articles(chunks, provenance);
    REQUIRE_EQ(articles.size(), 3u);
    CHECK_EQ(articles[0].id, "article_1");
    CHECK_EQ(articles[0].score, 0.9);
    CHECK_EQ(articles[1].id, "article_3");
    CHECK_EQ(articles[1].score, 0.8);
    CHECK_EQ(articles[2].id, "article_2");
    CHECK_EQ(articles[2].score, 0.6);

    CHECK_THROWS_AS(chunks_to_articles({{"mystery", 1.0}}, provenance), Error);
    CHECK(chunks_to_articles({}, provenance).empty());
}

TEST_CASE("article collapse keeps the best chunk's position") {
    std::mt19937_64 rng(101);
    for (int round = 0; round < 25; ++round) {
        const RankedList chunks = random_ranked(rng, 20);
        std::unordered_map<std::string, std::string> provenance;
        std::uniform_int_distribution<int> article_dist(0, 5);
        for (const ScoredHit& hit : chunks)
            provenance.emplace(hit.id, "art" + std::to_string(article_dist(rng)));

        const RankedList articles = chunks_to_articles(chunks, provenance);
        std::vector<std::string> first_seen;
        for (const ScoredHit& hit : chunks) {
            const std::string& article = provenance.at(hit.id);
            if (std::find(first_seen.begin(), first_seen.end(), article) ==
                first_seen.end())
                first_seen.push_back(article);
        }
        REQUIRE_EQ(articles.size(), first_seen.size());
        for (std::size_t i = 0; i < articles.size(); ++i)
            CHECK_EQ(articles[i].id, first_seen[i]);
    }
}

TEST_CASE("sub-query merging keeps each item's best normalized score") {
    std::mt19937_64 rng(103);
    for (int round = 0; round < 25; ++round) {
        const std::vector<RankedList> lists{random_ranked(rng, 10), random_ranked(rng, 10)};
        const RankedList merged = merge_subquery_results(lists);

        std::unordered_map<std::string, double> best;
        for (const RankedList& list : lists)
            for (const ScoredHit& hit : minmax_normalize(list)) {
                auto [it, inserted] = best.emplace(hit.id, hit.score);
                if (!inserted) it->second = std::max(it->second, hit.score);
            }
        REQUIRE_EQ(merged.size(), best.size());
        for (const ScoredHit& hit : merged)
            CHECK_EQ(hit.score, doctest::Approx(best.at(hit.id)).epsilon(1e-12));
        CHECK(std::is_sorted(merged.begin(), merged.end(),
                             [](const ScoredHit& a, const ScoredHit& b) {
                                 return a.score != b.score ? a.score > b.score
                                                           : a.id < b.id;
                             }));
    }
}

TEST_CASE("fusion configuration is validated") {
    FusionConfig config;
    config.w_lexical = -0.1;
    config.w_dense = 1.1;
    CHECK_THROWS_AS(config.validate(), ConfigError);

    config = {};
    config.w_lexical = 0.6;
    config.w_dense = 0.6;
    CHECK_THROWS_AS(config.validate(), ConfigError);

    config = {};
    config.rrf_k = 0.0;
    CHECK_THROWS_AS(config.validate(), ConfigError);

    config = {};
    config.top_k_per_side = 0;
    CHECK_THROWS_AS(config.validate(), ConfigError);

    CHECK_NOTHROW(FusionConfig{}.validate());
}

} // TEST_SUITE("fusion")
