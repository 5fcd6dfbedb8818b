#pragma once

// Shared test scaffolding: scratch directories, corpus builders, window-layout
// checks, and a fixture that owns everything a SearchContext points at.

#include <unistd.h>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "raglex/bm25.hpp"
#include "raglex/corpus.hpp"
#include "raglex/dense.hpp"
#include "raglex/embedding.hpp"
#include "raglex/fusion.hpp"
#include "raglex/pipeline.hpp"
#include "raglex/text.hpp"

namespace support {

namespace fs = std::filesystem;

// Scratch directory under the system temp root, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<unsigned> counter{0};
        const unsigned n = counter.fetch_add(1);
        path_ = fs::temp_directory_path() /
                ("raglex_test_" + std::to_string(::getpid()) + "_" + std::to_string(n));
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    std::string str(const std::string& sub = "") const {
        return sub.empty() ? path_.string() : (path_ / sub).string();
    }

private:
    fs::path path_;
};

inline void write_file(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path);
    out << content;
}

// One ready-to-index chunk; the span is the whole text.
inline raglex::Chunk basic_chunk(std::string chunk_id, std::string article_id,
                                 std::size_t index, const std::string& text,
                                 const raglex::StopwordSet& stoplist = {}) {
    raglex::WhitespaceSegmenter segmenter;
    raglex::Chunk chunk;
    chunk.chunk_id = std::move(chunk_id);
    chunk.article_id = std::move(article_id);
    chunk.chunk_index = index;
    chunk.token_span = {0, segmenter.segment(text).size()};
    chunk.text = text;
    chunk.dense_text = text;
    chunk.lexical_tokens = raglex::analyze(text, segmenter, stoplist);
    return chunk;
}

// Corpus of single-chunk articles (chunk id = "<article>#0") plus the sentinel.
inline raglex::Corpus corpus_from_texts(
    const std::vector<std::pair<std::string, std::string>>& articles) {
    raglex::Corpus corpus;
    const raglex::StopwordSet no_stopwords;
    for (const auto& [id, text] : articles) {
        raglex::Article article;
        article.id = id;
        article.body = text;
        corpus.articles.push_back(std::move(article));
        corpus.chunks.push_back(basic_chunk(id + "#0", id, 0, text, no_stopwords));
    }
    raglex::insert_negative_sentinel(corpus, no_stopwords);
    return corpus;
}

inline std::string zero_pad(std::size_t value, int width) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%0*zu", width, value);
    return buf;
}

// Corpus of single-chunk articles over vocabulary {w0..w<vocab-1>}, lengths in
// [1, max_len]. Padded ids make lexicographic id order equal insertion order.
inline raglex::Corpus random_token_corpus(std::mt19937_64& rng, std::size_t n_chunks,
                                          std::size_t vocab, std::size_t max_len,
                                          bool with_sentinel = false) {
    std::uniform_int_distribution<std::size_t> len_dist(1, max_len);
    std::uniform_int_distribution<std::size_t> term_dist(0, vocab - 1);
    std::vector<std::pair<std::string, std::string>> articles;
    articles.reserve(n_chunks);
    for (std::size_t i = 0; i < n_chunks; ++i) {
        const std::size_t len = len_dist(rng);
        std::string text;
        for (std::size_t j = 0; j < len; ++j) {
            if (j) text += ' ';
            text += "w" + std::to_string(term_dist(rng));
        }
        articles.emplace_back("art" + zero_pad(i, 4), std::move(text));
    }
    raglex::Corpus corpus = corpus_from_texts(articles);
    if (!with_sentinel) corpus.chunks.pop_back();
    return corpus;
}

inline std::vector<std::string> random_query(std::mt19937_64& rng, std::size_t vocab,
                                             std::size_t max_terms) {
    std::uniform_int_distribution<std::size_t> n_dist(1, max_terms);
    std::uniform_int_distribution<std::size_t> term_dist(0, vocab + vocab / 4);
    std::vector<std::string> query;
    const std::size_t n = n_dist(rng);
    for (std::size_t i = 0; i < n; ++i)
        query.push_back("w" + std::to_string(term_dist(rng)));  // some terms unseen
    return query;
}

// Random article whose body is "t0 t1 ... t<n-1>" with a random section layout.
inline raglex::Article random_sectioned_article(std::mt19937_64& rng, std::size_t id,
                                                std::size_t min_tokens,
                                                std::size_t max_tokens) {
    std::uniform_int_distribution<std::size_t> len_dist(min_tokens, max_tokens);
    const std::size_t n = len_dist(rng);

    raglex::Article article;
    article.id = "art" + zero_pad(id, 4);
    std::string body;
    for (std::size_t i = 0; i < n; ++i) {
        if (i) body += ' ';
        body += "t" + std::to_string(i);
    }
    article.body = std::move(body);

    if (n >= 2) {
        std::uniform_int_distribution<int> n_cuts(0, 6);
        std::uniform_int_distribution<std::size_t> cut_dist(1, n - 1);
        std::set<std::size_t> offsets;
        const int cuts = n_cuts(rng);
        for (int c = 0; c < cuts; ++c) offsets.insert(cut_dist(rng));
        std::size_t label = 0;
        for (std::size_t offset : offsets)
            article.section_headers.emplace_back(offset, "sec" + std::to_string(label++));
    }
    return article;
}

// Validates the windowing contract for one article's chunks: every chunk fits
// the budget, each section is tiled exactly, and in-section neighbors share
// exactly overlap_tokens. Returns "" on success, else a description.
inline std::string check_chunk_layout(const raglex::Article& article,
                                      const std::vector<raglex::Chunk>& chunks,
                                      std::size_t n_tokens,
                                      const raglex::ChunkingConfig& config) {
    if (n_tokens == 0) return chunks.empty() ? "" : "chunks for an empty article";
    if (chunks.empty()) return "no chunks for a non-empty article";

    std::set<std::size_t> cuts;
    for (const auto& [offset, label] : article.section_headers)
        if (offset > 0 && offset < n_tokens) cuts.insert(offset);
    std::vector<std::pair<std::size_t, std::size_t>> segments;
    std::size_t begin = 0;
    for (std::size_t cut : cuts) {
        segments.emplace_back(begin, cut);
        begin = cut;
    }
    segments.emplace_back(begin, n_tokens);

    for (std::size_t i = 0; i < chunks.size(); ++i) {
        const auto span = chunks[i].token_span;
        if (span.end <= span.start) return "empty span";
        if (span.end - span.start > config.max_chunk_tokens)
            return "chunk exceeds the token budget";
        if (chunks[i].chunk_index != i) return "chunk_index not sequential";
    }

    std::size_t next_chunk = 0;
    for (const auto& [seg_begin, seg_end] : segments) {
        std::vector<raglex::TokenSpan> spans;
        while (next_chunk < chunks.size() &&
               chunks[next_chunk].token_span.start >= seg_begin &&
               chunks[next_chunk].token_span.end <= seg_end) {
            spans.push_back(chunks[next_chunk].token_span);
            ++next_chunk;
        }
        if (spans.empty()) return "section with no chunks";
        if (spans.front().start != seg_begin) return "section not covered from its start";
        if (spans.back().end != seg_end) return "section not covered to its end";
        if (seg_end - seg_begin <= config.max_chunk_tokens && spans.size() != 1)
            return "small section split unnecessarily";
        for (std::size_t i = 1; i < spans.size(); ++i) {
            if (spans[i].start >= spans[i - 1].end) return "gap inside a section";
            if (spans[i - 1].end - spans[i].start != config.overlap_tokens)
                return "in-section overlap differs from the configured overlap";
        }
    }
    if (next_chunk != chunks.size()) return "chunk crosses a section boundary";
    return "";
}

// Owns a corpus, both indexes, and the lookup maps behind a SearchContext.
struct ContextFixture {
    raglex::Corpus corpus;
    raglex::HashingEmbedder provider{64};
    raglex::WhitespaceSegmenter segmenter;
    raglex::StopwordSet stopwords;
    raglex::Bm25Index lexical;
    raglex::DenseIndex dense;
    raglex::FusionConfig fusion;
    std::unordered_map<std::string, const raglex::Article*> article_by_id;
    std::unordered_map<std::string, std::string> chunk_to_article;
    std::unordered_map<std::string, std::vector<const raglex::Chunk*>> chunks_by_article;
    const raglex::Chunk* sentinel = nullptr;

    explicit ContextFixture(raglex::Corpus c, raglex::FusionConfig f = {})
        : corpus(std::move(c)), fusion(f) {
        lexical = raglex::Bm25Index::build(corpus.chunks);
        dense = raglex::DenseIndex::build(corpus.chunks, provider, raglex::DenseMode::exact);
        for (const raglex::Article& article : corpus.articles)
            article_by_id.emplace(article.id, &article);
        for (const raglex::Chunk& chunk : corpus.chunks) {
            chunk_to_article.emplace(chunk.chunk_id, chunk.article_id);
            if (chunk.is_sentinel) {
                sentinel = &chunk;
                continue;
            }
            chunks_by_article[chunk.article_id].push_back(&chunk);
        }
    }
    ContextFixture(const ContextFixture&) = delete;
    ContextFixture& operator=(const ContextFixture&) = delete;

    raglex::SearchContext context() const {
        raglex::SearchContext ctx;
        ctx.lexical = &lexical;
        ctx.dense = &dense;
        ctx.provider = &provider;
        ctx.segmenter = &segmenter;
        ctx.stopwords = &stopwords;
        ctx.fusion = fusion;
        ctx.article_by_id = &article_by_id;
        ctx.chunk_to_article = &chunk_to_article;
        ctx.chunks_by_article = &chunks_by_article;
        ctx.sentinel = sentinel;
        return ctx;
    }
};

inline const char* kRefusalJson =
    R"({"answerable": false, "answer": "", "cited_article_ids": []})";

inline std::string answer_json(const std::string& answer,
                               const std::vector<std::string>& cited) {
    std::string ids;
    for (std::size_t i = 0; i < cited.size(); ++i) {
        if (i) ids += ", ";
        ids += "\"" + cited[i] + "\"";
    }
    return R"({"answerable": true, "answer": ")" + answer +
           R"(", "cited_article_ids": [)" + ids + "]}";
}

// Deterministic per-run full-precision rendering of a ranked list, used for
// byte-identity comparisons across save/load.
inline std::string render_ranked(const raglex::RankedList& list) {
    std::ostringstream out;
    out.precision(17);
    for (const raglex::ScoredHit& hit : list) out << hit.id << ' ' << hit.score << '\n';
    return out.str();
}

// --- small end-to-end input set shared by the CLI, service, and eval tests ---

struct SampleFiles {
    std::string articles;
    std::string questions;
    std::string stopwords;
};

// Eight single-section articles, each carrying one rare marker token, plus
// questions that retrieve them by marker. Question q8's gold article does not
// exist, so evaluation must exclude it.
inline SampleFiles write_sample_inputs(const fs::path& dir) {
    write_file(dir / "articles.jsonl", R"({"id": "law1", "title": "hon nhan dieu kien", "content": "dieu kien ket hon nam tu du 20 tuoi nu tu du 18 tuoi viec ket hon do nam nu tu nguyen quyet dinh khetra"}
{"id": "law2", "title": "thue thu nhap", "content": "thue thu nhap ca nhan ap dung voi tien luong tien cong thu nhap tu kinh doanh muc giam tru gia canh quyphi"}
{"id": "law3", "title": "giao thong duong bo", "content": "nguoi dieu khien xe mo to phai co giay phep lai xe phu hop voi loai xe dang dieu khien bangxe"}
{"id": "law4", "title": "lao dong hop dong", "content": "hop dong lao dong phai duoc giao ket bang van ban thoi gian thu viec khong qua 60 ngay hopthu"}
{"id": "law5", "title": "dat dai quyen su dung", "content": "nguoi su dung dat duoc cap giay chung nhan quyen su dung dat khi du dieu kien theo quy dinh sodo"}
{"id": "law6", "title": "doanh nghiep thanh lap", "content": "doanh nghiep duoc thanh lap khi dang ky kinh doanh tai co quan dang ky kinh doanh dangky"}
{"id": "law7", "title": "hinh su trach nhiem", "content": "nguoi tu du 16 tuoi tro len phai chiu trach nhiem hinh su ve moi toi pham hinhsu"}
{"id": "law8", "title": "bao hiem xa hoi", "content": "nguoi lao dong tham gia bao hiem xa hoi bat buoc duoc huong che do om dau thai san baohiem"}
)");

    write_file(dir / "questions.jsonl", R"({"id": "q1", "content": "nam bao nhieu tuoi thi duoc ket hon khetra", "relevant_article_id": "law1"}
{"id": "q2", "content": "muc giam tru gia canh thue thu nhap quyphi", "relevant_article_id": "law2"}
{"id": "q3", "content": "lai xe mo to can giay phep gi bangxe", "relevant_article_id": "law3"}
{"id": "q4", "content": "thoi gian thu viec toi da bao lau hopthu", "relevant_article_id": "law4"}
{"id": "q5", "content": "khi nao duoc cap giay chung nhan quyen su dung dat sodo", "relevant_article_id": "law5"}
{"id": "q6", "content": "thanh lap doanh nghiep can lam gi dangky", "relevant_article_id": "law6"}
{"id": "q7", "content": "bao nhieu tuoi chiu trach nhiem hinh su hinhsu", "relevant_article_id": "law7"}
{"id": "q8", "content": "che do nghi phep nam la gi nghiphep", "relevant_article_id": "law99"}
)");

    write_file(dir / "stopwords.txt", "# function words\nla\ngi\nthi\nkhi\nnao\ncan\nve\nvoi\n");
    return {(dir / "articles.jsonl").string(), (dir / "questions.jsonl").string(),
            (dir / "stopwords.txt").string()};
}

} // namespace support
