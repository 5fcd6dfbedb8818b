#pragma once

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "raglex/bm25.hpp"
#include "raglex/corpus.hpp"
#include "raglex/dense.hpp"
#include "raglex/embedding.hpp"
#include "raglex/fusion.hpp"
#include "raglex/llm.hpp"
#include "raglex/text.hpp"

namespace raglex {

enum class AnswerStatus { answered, no_answer };

struct AnswerResult {
    AnswerStatus status = AnswerStatus::no_answer;
    std::string answer_text;  // canonical no-answer string when no_answer
    std::vector<std::string> supporting_article_ids;  // subset of the answering batch
    std::size_t llm_calls_used = 0;  // generation calls; parse retries and rewrites excluded
    bool active_retrieval_engaged = false;
    bool parse_failure = false;  // some batch response stayed unparseable after retries
    std::vector<std::string> articles_shown;  // every article sent to the model, in order
};

struct PipelineConfig {
    std::size_t batch_size = 3;  // articles per generation call, must be in [2, 5]
    std::size_t primary_article_limit = 10;
    std::size_t active_retrieval_chunk_cap = 50;
    bool rewrite_enabled = true;
    std::size_t max_query_tokens = 256;  // longer queries are decomposed
    int llm_max_retries = 1;  // extra attempts after an unparseable response

    /// Throws ConfigError naming the offending field.
    void validate() const;
};

/// Read-only view over everything a query needs. The engine owns the pieces;
/// tests may wire them up directly.
struct SearchContext {
    const Bm25Index* lexical = nullptr;
    const DenseIndex* dense = nullptr;
    const EmbeddingProvider* provider = nullptr;
    const Segmenter* segmenter = nullptr;
    const StopwordSet* stopwords = nullptr;
    FusionConfig fusion;
    const std::unordered_map<std::string, const Article*>* article_by_id = nullptr;
    const std::unordered_map<std::string, std::string>* chunk_to_article = nullptr;
    const std::unordered_map<std::string, std::vector<const Chunk*>>* chunks_by_article =
        nullptr;
    const Chunk* sentinel = nullptr;  // absent in corpora built without one
};

struct RewriteOutcome {
    std::string query;
    bool degraded = false;  // client failed or returned nothing; raw query kept
};

std::string build_rewrite_prompt(const std::string& raw_query);

/// Asks the client for a cleaned-up query. Any client failure or empty
/// response degrades to the raw query; the result is never empty for a
/// non-empty input.
RewriteOutcome rewrite_query(LlmClient& client, const std::string& raw_query);

/// Renders the answering prompt: fixed instruction header, one
/// "[id] title: text" line per article, the question, and the response-format
/// contract.
std::string build_answer_prompt(const std::string& question,
                                const std::vector<const Article*>& articles);

struct BatchOutcome {
    bool answerable = false;
    std::string answer;
    std::vector<std::string> cited_article_ids;  // intersected with the batch
    bool parse_failure = false;
};

/// One generation call over one batch of articles. The response must be a
/// JSON object {"answerable", "answer", "cited_article_ids"}; an unparseable
/// response is retried up to max_retries times, then treated as a refusal
/// with parse_failure set. Transport errors propagate.
BatchOutcome generate_answer(LlmClient& client, const std::string& query,
                             const std::vector<const Article*>& articles,
                             int max_retries);

/// Batched answering over the ranked articles. Phase 1 walks the top
/// primary_article_limit articles in batches; if every batch refuses,
/// phase 2 walks the chunk ranking past the primary articles, converting
/// chunks of not-yet-shown articles into further batches until an answer
/// arrives or active_retrieval_chunk_cap chunks have been consumed.
AnswerResult active_retrieval(LlmClient& client, const std::string& query,
                              const RankedList& ranked_articles,
                              const RankedList& ranked_chunks,
                              const PipelineConfig& config, const SearchContext& ctx);

/// Scores every candidate against the answer text (BM25 + cosine, min-max
/// normalized within the candidate set, weight-fused) and returns the full
/// permutation, best first. Duplicate candidate ids are kept once.
RankedList rerank_by_answer(const AnswerResult& answer,
                            const std::vector<const Chunk*>& candidates,
                            const SearchContext& ctx);

/// Lexical + dense retrieval for one query string, fused per ctx.fusion.
/// Returns chunk ids; the sentinel is not filtered here.
RankedList hybrid_chunk_search(const SearchContext& ctx, const std::string& query_text,
                               std::size_t k_per_side);

/// Full flow: rewrite, decompose when the query exceeds max_query_tokens,
/// retrieve and fuse per sub-query, merge, aggregate to articles, answer with
/// active retrieval, then re-rank the shown articles' chunks by the answer.
/// Returns the answer plus reference chunks (empty when no_answer; the
/// sentinel never appears). Throws Error when the context has no indexes.
std::pair<AnswerResult, RankedList> answer_pipeline(const SearchContext& ctx,
                                                    LlmClient& client,
                                                    const std::string& raw_query,
                                                    const PipelineConfig& config);

} // namespace raglex
