#include "raglex/corpus.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <unordered_set>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <json.hpp>

#include "raglex/errors.hpp"

namespace raglex {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string join_tokens(const std::vector<std::string>& tokens, std::size_t begin,
                        std::size_t end) {
    std::ostringstream out;
    for (std::size_t i = begin; i < end; ++i) {
        if (i != begin) out << ' ';
        out << tokens[i];
    }
    return out.str();
}

struct Segment {
    std::size_t begin;
    std::size_t end;
};

// Partition [0, n) at the header offsets; a non-empty preamble before the
// first header forms its own segment.
std::vector<Segment> split_segments(const Article& article, std::size_t n_tokens) {
    std::vector<std::size_t> cuts;
    for (const auto& [offset, label] : article.section_headers) {
        if (offset > 0 && offset < n_tokens) cuts.push_back(offset);
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    std::vector<Segment> segments;
    std::size_t begin = 0;
    for (std::size_t cut : cuts) {
        if (cut > begin) segments.push_back({begin, cut});
        begin = cut;
    }
    if (n_tokens > begin) segments.push_back({begin, n_tokens});
    return segments;
}

Chunk make_chunk(const Article& article, const std::vector<std::string>& tokens,
                 std::size_t begin, std::size_t end, std::size_t index,
                 const StopwordSet& stoplist) {
    Chunk chunk;
    chunk.article_id = article.id;
    chunk.chunk_id = article.id + "#" + std::to_string(index);
    chunk.chunk_index = index;
    chunk.token_span = {begin, end};
    chunk.text = join_tokens(tokens, begin, end);
    chunk.dense_text = chunk.text;
    for (std::size_t i = begin; i < end; ++i) {
        std::string folded = fold_token(tokens[i]);
        if (folded.empty() || stoplist.contains(folded)) continue;
        chunk.lexical_tokens.push_back(std::move(folded));
    }
    return chunk;
}

// Token start offsets under whitespace segmentation; used to anchor detected
// section markers to token positions.
std::vector<std::size_t> token_start_offsets(std::string_view text) {
    std::vector<std::size_t> starts;
    bool in_token = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const bool space = std::isspace(static_cast<unsigned char>(text[i])) != 0;
        if (!space && !in_token) starts.push_back(i);
        in_token = !space;
    }
    return starts;
}

void detect_sections(Article& article, const std::string& pattern) {
    if (pattern.empty() || !article.section_headers.empty()) return;
    const std::regex re(pattern);
    const auto starts = token_start_offsets(article.body);
    auto begin = std::sregex_iterator(article.body.begin(), article.body.end(), re);
    for (auto it = begin; it != std::sregex_iterator(); ++it) {
        const auto byte_pos = static_cast<std::size_t>(it->position());
        const auto lb = std::lower_bound(starts.begin(), starts.end(), byte_pos);
        if (lb == starts.end()) continue;
        const auto token_index = static_cast<std::size_t>(lb - starts.begin());
        article.section_headers.emplace_back(token_index, it->str());
    }
}

} // namespace

std::vector<Chunk> chunk_article(const Article& article, const Segmenter& segmenter,
                                 const StopwordSet& stoplist,
                                 const ChunkingConfig& config) {
    if (config.max_chunk_tokens <= config.overlap_tokens) {
        throw ConfigError("chunking: max_chunk_tokens (" +
                          std::to_string(config.max_chunk_tokens) +
                          ") must exceed overlap_tokens (" +
                          std::to_string(config.overlap_tokens) + ")");
    }
    const auto tokens = segmenter.segment(article.body);
    const std::size_t stride = config.max_chunk_tokens - config.overlap_tokens;

    std::vector<Chunk> chunks;
    for (const Segment& seg : split_segments(article, tokens.size())) {
        if (seg.end - seg.begin <= config.max_chunk_tokens) {
            chunks.push_back(
                make_chunk(article, tokens, seg.begin, seg.end, chunks.size(), stoplist));
            continue;
        }
        std::size_t start = seg.begin;
        while (true) {
            const std::size_t end = std::min(start + config.max_chunk_tokens, seg.end);
            chunks.push_back(make_chunk(article, tokens, start, end, chunks.size(), stoplist));
            if (end == seg.end) break;
            start += stride;
        }
    }
    return chunks;
}

Chunk enrich_metadata(Chunk chunk, const Article& article) {
    std::string label;
    for (const auto& [offset, header] : article.section_headers) {
        if (offset <= chunk.token_span.start) {
            label = header;
        } else {
            break;
        }
    }
    std::string prefix;
    if (!article.title.empty()) {
        chunk.meta["title"] = article.title;
        prefix += article.title + ". ";
    }
    if (!label.empty()) {
        chunk.meta["section_label"] = label;
        prefix += label + ". ";
    }
    chunk.dense_text = prefix + chunk.dense_text;
    return chunk;
}

void insert_negative_sentinel(Corpus& corpus, const StopwordSet& stoplist,
                              std::string sentinel_text) {
    for (const auto& chunk : corpus.chunks) {
        if (chunk.is_sentinel) {
            throw BuildError("corpus already contains a sentinel chunk: " + chunk.chunk_id);
        }
    }
    WhitespaceSegmenter segmenter;
    Chunk sentinel;
    sentinel.chunk_id = std::string(kSentinelId);
    sentinel.article_id = std::string(kSentinelId);
    sentinel.chunk_index = 0;
    sentinel.token_span = {0, segmenter.segment(sentinel_text).size()};
    sentinel.lexical_tokens = analyze(sentinel_text, segmenter, stoplist);
    sentinel.dense_text = sentinel_text;
    sentinel.text = std::move(sentinel_text);
    sentinel.is_sentinel = true;
    corpus.chunks.push_back(std::move(sentinel));
}

Corpus ingest_articles(std::vector<Article> raw_articles, const Segmenter& segmenter,
                       const StopwordSet& stoplist, const IngestConfig& config) {
    std::unordered_set<std::string> seen_ids;
    for (auto& article : raw_articles) {
        article.title = normalize_text(article.title);
        article.body = normalize_text(article.body);
        if (article.body.empty()) {
            throw BuildError("article has empty body after normalization: " + article.id);
        }
        if (!seen_ids.insert(article.id).second) {
            throw BuildError("duplicate article id: " + article.id);
        }
        detect_sections(article, config.section_pattern);
    }

    int n_threads = config.threads;
#ifdef _OPENMP
    if (n_threads <= 0) n_threads = omp_get_max_threads();
#else
    n_threads = 1;
#endif

    std::vector<std::vector<Chunk>> per_article(raw_articles.size());
    std::string first_error;
#pragma omp parallel for num_threads(n_threads) schedule(dynamic)
    for (std::size_t i = 0; i < raw_articles.size(); ++i) {
        try {
            auto chunks = chunk_article(raw_articles[i], segmenter, stoplist, config.chunking);
            for (auto& chunk : chunks) {
                chunk = enrich_metadata(std::move(chunk), raw_articles[i]);
            }
            per_article[i] = std::move(chunks);
        } catch (const std::exception& e) {
#pragma omp critical
            if (first_error.empty()) first_error = e.what();
        }
    }
    if (!first_error.empty()) throw BuildError(first_error);

    Corpus corpus;
    corpus.articles = std::move(raw_articles);
    for (auto& chunks : per_article) {
        for (auto& chunk : chunks) corpus.chunks.push_back(std::move(chunk));
    }
    insert_negative_sentinel(corpus, stoplist);
    return corpus;
}

// --- persistence ---

namespace {

json article_to_json(const Article& a) {
    json headers = json::array();
    for (const auto& [offset, label] : a.section_headers) {
        headers.push_back(json::array({offset, label}));
    }
    return json{{"id", a.id},
                {"title", a.title},
                {"body", a.body},
                {"section_headers", headers},
                {"source_meta", a.source_meta}};
}

Article article_from_json(const json& j) {
    Article a;
    a.id = j.at("id").get<std::string>();
    a.title = j.value("title", "");
    if (j.contains("body")) {
        a.body = j.at("body").get<std::string>();
    } else {
        a.body = j.at("content").get<std::string>(); // raw input alias
    }
    if (j.contains("section_headers")) {
        for (const auto& h : j.at("section_headers")) {
            a.section_headers.emplace_back(h.at(0).get<std::size_t>(),
                                           h.at(1).get<std::string>());
        }
    }
    if (j.contains("source_meta")) {
        a.source_meta = j.at("source_meta").get<std::map<std::string, std::string>>();
    }
    return a;
}

json chunk_to_json(const Chunk& c) {
    return json{{"chunk_id", c.chunk_id},
                {"article_id", c.article_id},
                {"chunk_index", c.chunk_index},
                {"token_span", json::array({c.token_span.start, c.token_span.end})},
                {"text", c.text},
                {"lexical_tokens", c.lexical_tokens},
                {"dense_text", c.dense_text},
                {"meta", c.meta},
                {"is_sentinel", c.is_sentinel}};
}

Chunk chunk_from_json(const json& j) {
    Chunk c;
    c.chunk_id = j.at("chunk_id").get<std::string>();
    c.article_id = j.at("article_id").get<std::string>();
    c.chunk_index = j.at("chunk_index").get<std::size_t>();
    c.token_span = {j.at("token_span").at(0).get<std::size_t>(),
                    j.at("token_span").at(1).get<std::size_t>()};
    c.text = j.at("text").get<std::string>();
    c.lexical_tokens = j.at("lexical_tokens").get<std::vector<std::string>>();
    c.dense_text = j.at("dense_text").get<std::string>();
    c.meta = j.at("meta").get<std::map<std::string, std::string>>();
    c.is_sentinel = j.at("is_sentinel").get<bool>();
    return c;
}

template <typename Fn>
void for_each_jsonl(const std::string& path, Fn&& fn) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            fn(json::parse(line));
        } catch (const json::exception& e) {
            throw IoError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
}

} // namespace

std::vector<Article> load_articles_jsonl(const std::string& path) {
    std::vector<Article> articles;
    for_each_jsonl(path, [&](const json& j) { articles.push_back(article_from_json(j)); });
    return articles;
}

std::vector<Question> load_questions_jsonl(const std::string& path,
                                           const Segmenter& segmenter,
                                           std::size_t max_query_tokens) {
    std::vector<Question> questions;
    for_each_jsonl(path, [&](const json& j) {
        Question q;
        q.id = j.at("id").get<std::string>();
        q.raw_text = j.at("content").get<std::string>();
        q.gold_article_id = j.value("relevant_article_id", "");
        q.processed_text =
            truncate_query(normalize_text(q.raw_text), segmenter, max_query_tokens);
        questions.push_back(std::move(q));
    });
    return questions;
}

void save_corpus(const Corpus& corpus, const std::string& dir) {
    fs::create_directories(dir);
    {
        std::ofstream out(fs::path(dir) / "articles.jsonl");
        if (!out) throw IoError("cannot write articles.jsonl under " + dir);
        for (const auto& a : corpus.articles) out << article_to_json(a).dump() << '\n';
    }
    {
        std::ofstream out(fs::path(dir) / "chunks.jsonl");
        if (!out) throw IoError("cannot write chunks.jsonl under " + dir);
        for (const auto& c : corpus.chunks) out << chunk_to_json(c).dump() << '\n';
    }
    {
        std::ofstream out(fs::path(dir) / "corpus_meta.json");
        out << json{{"version", 1},
                    {"articles", corpus.articles.size()},
                    {"chunks", corpus.chunks.size()}}
                   .dump(2)
            << '\n';
    }
}

Corpus load_corpus(const std::string& dir) {
    Corpus corpus;
    for_each_jsonl((fs::path(dir) / "articles.jsonl").string(),
                   [&](const json& j) { corpus.articles.push_back(article_from_json(j)); });
    for_each_jsonl((fs::path(dir) / "chunks.jsonl").string(),
                   [&](const json& j) { corpus.chunks.push_back(chunk_from_json(j)); });
    return corpus;
}

} // namespace raglex
