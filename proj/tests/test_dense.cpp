#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "raglex/corpus.hpp"
#include "raglex/dense.hpp"
#include "raglex/embedding.hpp"
#include "raglex/errors.hpp"
#include "raglex/hnsw.hpp"
#include "raglex/ref.hpp"

#include "support.hpp"

using namespace raglex;

namespace {

// Provider stub returning a fixed vector regardless of input.
class FixedProvider final : public EmbeddingProvider {
public:
    explicit FixedProvider(std::vector<float> row) : row_(std::move(row)) {}
    std::vector<float> embed(std::string_view) const override { return row_; }
    std::size_t dimension() const override { return row_.size(); }

private:
    std::vector<float> row_;
};

double norm_of(std::span<const float> v) {
    double sum = 0.0;
    for (float x : v) sum += static_cast<double>(x) * static_cast<double>(x);
    return std::sqrt(sum);
}

// Flattens the stored rows in id order so the reference scan sees exactly the
// index's data.
std::vector<float> stored_rows(const DenseIndex& index) {
    std::vector<float> data;
    data.reserve(index.size() * index.dimension());
    for (const std::string& id : index.ids()) {
        const auto row = index.vector_of(id);
        data.insert(data.end(), row.begin(), row.end());
    }
    return data;
}

} // namespace

TEST_SUITE("dense") {

TEST_CASE("cosine matches hand-computed values and clamps to [-1, 1]") {
    const std::vector<float> e0{1.0f, 0.0f};
    const std::vector<float> diag{1.0f, 1.0f};
    const std::vector<float> e1{0.0f, 1.0f};
    CHECK_EQ(cosine(e0, diag), doctest::Approx(0.7071067811865475).epsilon(1e-12));
    CHECK_EQ(cosine(e0, e1), 0.0);
    CHECK_EQ(cosine(e0, e0), 1.0);
    CHECK_LE(cosine(diag, diag), 1.0);

    const std::vector<float> three{1.0f, 0.0f, 0.0f};
    CHECK_THROWS_AS(cosine(e0, three), Error);
    const std::vector<float> zero{0.0f, 0.0f};
    CHECK_THROWS_AS(cosine(e0, zero), Error);
}

TEST_CASE("the hashing embedder is deterministic and unit-norm") {
    const HashingEmbedder embedder(64);
    CHECK_EQ(embedder.dimension(), 64u);
    const auto a = embedder.embed("thue thu nhap ca nhan");
    CHECK_EQ(a, embedder.embed("thue thu nhap ca nhan"));
    CHECK_EQ(norm_of(a), doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("token folding makes the embedder case and punctuation insensitive") {
    const HashingEmbedder embedder(64);
    CHECK_EQ(embedder.embed("Tax LAW,"), embedder.embed("tax law"));
}

TEST_CASE("token-free text maps to the first basis vector") {
    const HashingEmbedder embedder(8);
    const std::vector<float> e0{1, 0, 0, 0, 0, 0, 0, 0};
    CHECK_EQ(embedder.embed(""), e0);
    CHECK_EQ(embedder.embed("..."), e0);
}

TEST_CASE("the embedder rejects dimension zero") {
    CHECK_THROWS_AS(HashingEmbedder(0), ConfigError);
}

TEST_CASE("embed_query re-normalizes and rejects broken providers") {
    const HashingEmbedder good(16);
    CHECK_EQ(norm_of(embed_query(good, "a b c")), doctest::Approx(1.0).epsilon(1e-6));

    const FixedProvider zeros(std::vector<float>(16, 0.0f));
    CHECK_THROWS_AS(embed_query(zeros, "x"), ProviderError);

    const FixedProvider unnormalized({3.0f, 4.0f});
    const auto unit = embed_query(unnormalized, "x");
    CHECK_EQ(unit[0], doctest::Approx(0.6).epsilon(1e-6));
    CHECK_EQ(unit[1], doctest::Approx(0.8).epsilon(1e-6));
}

TEST_CASE("build stores one unit row per chunk in id order") {
    const Corpus corpus = support::corpus_from_texts(
        {{"b", "beta text"}, {"a", "alpha text"}, {"c", "gamma text"}});
    const HashingEmbedder provider(64);
    const DenseIndex index =
        DenseIndex::build(corpus.chunks, provider, DenseMode::exact);
    CHECK_EQ(index.size(), 4u);  // three articles plus the sentinel
    CHECK_EQ(index.dimension(), 64u);
    CHECK(std::is_sorted(index.ids().begin(), index.ids().end()));
    for (const std::string& id : index.ids())
        CHECK_EQ(norm_of(index.vector_of(id)), doctest::Approx(1.0).epsilon(1e-6));
    CHECK_THROWS_AS(index.vector_of("missing"), Error);
}

TEST_CASE("build rejects empty and duplicate input") {
    const HashingEmbedder provider(8);
    CHECK_THROWS_AS(DenseIndex::build({}, provider, DenseMode::exact), BuildError);

    std::vector<Chunk> dup;
    dup.push_back(support::basic_chunk("D1", "x", 0, "a"));
    dup.push_back(support::basic_chunk("D1", "x", 1, "b"));
    CHECK_THROWS_AS(DenseIndex::build(dup, provider, DenseMode::exact), BuildError);
}

TEST_CASE("exact search equals the exhaustive reference scan") {
    std::mt19937_64 rng(47);
    const HashingEmbedder provider(64);
    for (int round = 0; round < 10; ++round) {
        const Corpus corpus = support::random_token_corpus(rng, 30, 25, 12);
        const DenseIndex index =
            DenseIndex::build(corpus.chunks, provider, DenseMode::exact);
        const std::vector<float> data = stored_rows(index);

        for (int q = 0; q < 5; ++q) {
            std::string text;
            for (const std::string& term : support::random_query(rng, 25, 4))
                text += term + " ";
            const auto query = embed_query(provider, text);
            const RankedList got = index.search(query, 10);
            const RankedList want =
                ref::dense_scan(index.ids(), data, index.dimension(), query, 10);
            CHECK_EQ(got, want);
        }
    }
}

TEST_CASE("search validates its inputs") {
    const Corpus corpus = support::corpus_from_texts({{"a", "x y"}, {"b", "y z"}});
    const HashingEmbedder provider(16);
    const DenseIndex index = DenseIndex::build(corpus.chunks, provider, DenseMode::exact);

    const auto query = embed_query(provider, "x");
    CHECK_THROWS_AS(index.search(query, 0), Error);
    CHECK_THROWS_AS(index.search(std::vector<float>(8, 0.1f), 5), Error);
    CHECK_THROWS_AS(index.search(std::vector<float>(16, 0.0f), 5), Error);
    CHECK_EQ(index.search(query, 1000).size(), index.size());  // k clamps
}

TEST_CASE("equal vectors tie by ascending chunk id") {
    const Corpus corpus = support::corpus_from_texts(
        {{"b", "same text"}, {"a", "same text"}, {"c", "other words"}});
    const HashingEmbedder provider(32);
    const DenseIndex index = DenseIndex::build(corpus.chunks, provider, DenseMode::exact);
    const RankedList hits = index.search(embed_query(provider, "same text"), 2);
    REQUIRE_EQ(hits.size(), 2u);
    CHECK_EQ(hits[0].id, "a#0");
    CHECK_EQ(hits[1].id, "b#0");
    CHECK_EQ(hits[0].score, hits[1].score);
}

TEST_CASE("the thread count does not change the build") {
    std::mt19937_64 rng(53);
    const Corpus corpus = support::random_token_corpus(rng, 40, 20, 10);
    const HashingEmbedder provider(32);
    const DenseIndex serial =
        DenseIndex::build(corpus.chunks, provider, DenseMode::exact, {}, 1);
    const DenseIndex parallel =
        DenseIndex::build(corpus.chunks, provider, DenseMode::exact, {}, 4);
    REQUIRE_EQ(serial.ids(), parallel.ids());
    for (const std::string& id : serial.ids()) {
        const auto a = serial.vector_of(id);
        const auto b = parallel.vector_of(id);
        CHECK(std::equal(a.begin(), a.end(), b.begin(), b.end()));
    }
}

TEST_CASE("graph search finds near neighbors on hashed text") {
    std::mt19937_64 rng(59);
    const Corpus corpus = support::random_token_corpus(rng, 300, 120, 10);
    const HashingEmbedder provider(64);
    const DenseIndex exact =
        DenseIndex::build(corpus.chunks, provider, DenseMode::exact);
    const DenseIndex approx =
        DenseIndex::build(corpus.chunks, provider, DenseMode::hnsw);

    double recall_sum = 0.0;
    const int n_queries = 50;
    for (int q = 0; q < n_queries; ++q) {
        std::string text;
        for (const std::string& term : support::random_query(rng, 120, 5))
            text += term + " ";
        const auto query = embed_query(provider, text);
        const RankedList truth = exact.search(query, 10);
        const RankedList got = approx.search(query, 10);
        std::size_t hits = 0;
        for (const ScoredHit& hit : got)
            for (const ScoredHit& t : truth)
                if (hit.id == t.id) {
                    ++hits;
                    break;
                }
        recall_sum += static_cast<double>(hits) / static_cast<double>(truth.size());
    }
    CHECK_GE(recall_sum / n_queries, 0.9);
}

TEST_CASE("graph builds are reproducible bit for bit") {
    std::mt19937_64 rng(61);
    const Corpus corpus = support::random_token_corpus(rng, 80, 40, 8);
    const HashingEmbedder provider(32);
    const HnswParams params{8, 40, 30, 42};
    const DenseIndex a =
        DenseIndex::build(corpus.chunks, provider, DenseMode::hnsw, params);
    const DenseIndex b =
        DenseIndex::build(corpus.chunks, provider, DenseMode::hnsw, params);

    support::TempDir da, db;
    a.save(da.str());
    b.save(db.str());
    std::ifstream ga(da.str("graph.bin"), std::ios::binary);
    std::ifstream gb(db.str("graph.bin"), std::ios::binary);
    std::stringstream sa, sb;
    sa << ga.rdbuf();
    sb << gb.rdbuf();
    CHECK_EQ(sa.str(), sb.str());
}

TEST_CASE("save and load preserve rankings in both modes") {
    std::mt19937_64 rng(67);
    const Corpus corpus = support::random_token_corpus(rng, 60, 30, 10);
    const HashingEmbedder provider(32);
    for (const DenseMode mode : {DenseMode::exact, DenseMode::hnsw}) {
        const DenseIndex index =
            DenseIndex::build(corpus.chunks, provider, mode, {8, 40, 30, 42});
        support::TempDir dir;
        index.save(dir.str());
        const DenseIndex loaded = DenseIndex::load(dir.str());
        CHECK_EQ(loaded.mode(), mode);
        CHECK_EQ(loaded.dimension(), index.dimension());
        CHECK_EQ(loaded.ids(), index.ids());
        for (int q = 0; q < 10; ++q) {
            std::string text;
            for (const std::string& term : support::random_query(rng, 30, 4))
                text += term + " ";
            const auto query = embed_query(provider, text);
            CHECK_EQ(support::render_ranked(loaded.search(query, 15)),
                     support::render_ranked(index.search(query, 15)));
        }
    }
    CHECK_THROWS_AS(DenseIndex::load("/nonexistent/dir"), IoError);
}

TEST_CASE("graph parameters are validated and the empty graph yields nothing") {
    const float row[2] = {1.0f, 0.0f};
    CHECK_THROWS_AS(HnswGraph::build(row, 1, 2, {1, 10, 10, 42}), ConfigError);
    CHECK_THROWS_AS(HnswGraph::build(row, 1, 2, {4, 2, 10, 42}), ConfigError);

    const HnswGraph empty;
    CHECK(empty.empty());
    CHECK(empty.search(row, 2, row, 5, 10).empty());
}

TEST_CASE("mode names round-trip") {
    CHECK_EQ(to_string(DenseMode::exact), "exact");
    CHECK_EQ(to_string(DenseMode::hnsw), "hnsw");
    CHECK_EQ(dense_mode_from_string("exact"), DenseMode::exact);
    CHECK_EQ(dense_mode_from_string("hnsw"), DenseMode::hnsw);
    CHECK_THROWS_AS(dense_mode_from_string("fuzzy"), ConfigError);
}

} // TEST_SUITE("dense")
