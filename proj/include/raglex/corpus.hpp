#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "raglex/text.hpp"

namespace raglex {

/// Canonical sentence returned when no answer can be produced. The negative
/// sentinel chunk carries exactly this text so that a failed answer re-ranks
/// it to the top.
inline constexpr std::string_view kNoAnswerText = "Không tìm thấy câu trả lời.";

/// Chunk id of the negative sentinel.
inline constexpr std::string_view kSentinelId = "__sentinel__";

struct Article {
    std::string id;
    std::string title;
    // (token offset, label) pairs, ascending by offset. May be empty.
    std::vector<std::pair<std::size_t, std::string>> section_headers;
    std::string body; // normalized text
    std::map<std::string, std::string> source_meta;
};

struct TokenSpan {
    std::size_t start = 0;
    std::size_t end = 0;
};

struct Chunk {
    std::string chunk_id;
    std::string article_id;
    std::size_t chunk_index = 0;
    TokenSpan token_span; // in segmented-token units, article-relative
    std::string text;
    std::vector<std::string> lexical_tokens; // folded, stopwords removed
    std::string dense_text;                  // segmented text, stopwords retained
    std::map<std::string, std::string> meta;
    bool is_sentinel = false;
};

struct Question {
    std::string id;
    std::string raw_text;
    std::string processed_text; // normalized, truncated to max_query_tokens
    std::string gold_article_id;
};

struct Corpus {
    std::vector<Article> articles;
    std::vector<Chunk> chunks;
};

struct ChunkingConfig {
    std::size_t max_chunk_tokens = 256;
    std::size_t overlap_tokens = 64;
};

/// Splits an article into chunks. Sections that fit in max_chunk_tokens
/// become one chunk each; oversized sections and sectionless bodies are
/// windowed with stride = max - overlap, the last window clamped to the
/// segment end. Throws ConfigError when max <= overlap.
std::vector<Chunk> chunk_article(const Article& article, const Segmenter& segmenter,
                                 const StopwordSet& stoplist,
                                 const ChunkingConfig& config = {});

/// Adds article title and section label to chunk.meta and prefixes dense_text
/// with "title. label. " so the embedding carries document context.
Chunk enrich_metadata(Chunk chunk, const Article& article);

/// Appends the single negative sentinel chunk. Throws BuildError when the
/// corpus already has one.
void insert_negative_sentinel(Corpus& corpus, const StopwordSet& stoplist,
                              std::string sentinel_text = std::string(kNoAnswerText));

struct IngestConfig {
    ChunkingConfig chunking;
    // Regex located in the article body to mark section starts when the input
    // record carries no explicit section_headers. Empty disables detection.
    std::string section_pattern;
    int threads = 0; // 0 = library default
};

/// Full ingest: normalize, detect sections, chunk (parallel over articles),
/// enrich, and append the sentinel.
Corpus ingest_articles(std::vector<Article> raw_articles, const Segmenter& segmenter,
                       const StopwordSet& stoplist, const IngestConfig& config = {});

// --- persistence (line-delimited JSON records, UTF-8) ---

std::vector<Article> load_articles_jsonl(const std::string& path);
std::vector<Question> load_questions_jsonl(const std::string& path,
                                           const Segmenter& segmenter,
                                           std::size_t max_query_tokens = 256);

void save_corpus(const Corpus& corpus, const std::string& dir);
Corpus load_corpus(const std::string& dir);

} // namespace raglex
