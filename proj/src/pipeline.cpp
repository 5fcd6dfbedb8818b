#include "raglex/pipeline.hpp"

#include <algorithm>
#include <optional>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "raglex/errors.hpp"

namespace raglex {
namespace {

using nlohmann::json;

constexpr std::string_view kAnswerInstruction =
    "You are an expert lawyer in Vietnam, tasked with answering frequently asked "
    "questions (FAQs) from customers about Vietnamese law based on the given "
    "information. Please use, gather, and deduce based on the knowledge in the "
    "following information to answer the user's question. Please respond accurately, "
    "concisely, and to the point, without being too verbose.";

constexpr std::string_view kFormatInstruction =
    "Respond with a single JSON object {\"answerable\": true|false, \"answer\": "
    "\"...\", \"cited_article_ids\": [\"...\"]} and nothing else. Set \"answerable\" "
    "to false when the given information cannot answer the question.";

void require_indexes(const SearchContext& ctx) {
    if (ctx.lexical == nullptr || ctx.dense == nullptr || ctx.lexical->doc_count() == 0 ||
        ctx.dense->size() == 0)
        throw Error("pipeline: no indexes available");
    if (ctx.provider == nullptr || ctx.segmenter == nullptr || ctx.stopwords == nullptr ||
        ctx.article_by_id == nullptr || ctx.chunk_to_article == nullptr ||
        ctx.chunks_by_article == nullptr)
        throw Error("pipeline: incomplete search context");
}

std::optional<BatchOutcome> try_parse_response(const std::string& raw) {
    json parsed;
    try {
        parsed = json::parse(raw);
    } catch (const json::exception&) {
        // Models often wrap the object in prose; take the outermost braces.
        const auto open = raw.find('{');
        const auto close = raw.rfind('}');
        if (open == std::string::npos || close == std::string::npos || close <= open)
            return std::nullopt;
        try {
            parsed = json::parse(raw.substr(open, close - open + 1));
        } catch (const json::exception&) {
            return std::nullopt;
        }
    }
    if (!parsed.is_object() || !parsed.contains("answerable") ||
        !parsed["answerable"].is_boolean())
        return std::nullopt;

    BatchOutcome outcome;
    outcome.answerable = parsed["answerable"].get<bool>();
    if (parsed.contains("answer") && parsed["answer"].is_string())
        outcome.answer = normalize_text(parsed["answer"].get<std::string>());
    if (parsed.contains("cited_article_ids") && parsed["cited_article_ids"].is_array())
        for (const auto& entry : parsed["cited_article_ids"])
            if (entry.is_string()) outcome.cited_article_ids.push_back(entry.get<std::string>());
    if (outcome.answerable && outcome.answer.empty()) return std::nullopt;
    return outcome;
}

AnswerResult no_answer_result() {
    AnswerResult result;
    result.status = AnswerStatus::no_answer;
    result.answer_text = std::string(kNoAnswerText);
    return result;
}

AnswerResult answered_result(const BatchOutcome& outcome) {
    AnswerResult result;
    result.status = AnswerStatus::answered;
    result.answer_text = outcome.answer;
    result.supporting_article_ids = outcome.cited_article_ids;
    return result;
}

const Article* find_article(const SearchContext& ctx, const std::string& id) {
    const auto it = ctx.article_by_id->find(id);
    if (it == ctx.article_by_id->end())
        throw Error("pipeline: unknown article id: " + id);
    return it->second;
}

} // namespace

void PipelineConfig::validate() const {
    if (batch_size < 2 || batch_size > 5)
        throw ConfigError("pipeline.batch_size must be in [2, 5]");
    if (primary_article_limit < 1)
        throw ConfigError("pipeline.primary_article_limit must be >= 1");
    if (active_retrieval_chunk_cap < batch_size)
        throw ConfigError("pipeline.active_retrieval_chunk_cap must be >= batch_size");
    if (max_query_tokens < 1)
        throw ConfigError("pipeline.max_query_tokens must be >= 1");
    if (llm_max_retries < 0)
        throw ConfigError("pipeline.llm_max_retries must be >= 0");
}

std::string build_rewrite_prompt(const std::string& raw_query) {
    return "Rewrite the following Vietnamese legal question so it is clear, specific, "
           "and free of typos and abbreviations, preserving its meaning. Return only "
           "the rewritten question.\nQuestion: " +
           raw_query;
}

RewriteOutcome rewrite_query(LlmClient& client, const std::string& raw_query) {
    try {
        const std::string rewritten = normalize_text(client.complete(build_rewrite_prompt(raw_query)));
        if (rewritten.empty()) return {raw_query, true};
        return {rewritten, false};
    } catch (const std::exception&) {
        return {raw_query, true};
    }
}

std::string build_answer_prompt(const std::string& question,
                                const std::vector<const Article*>& articles) {
    std::string prompt(kAnswerInstruction);
    prompt += "\nRelevant legal information:\n";
    for (const Article* article : articles) {
        prompt += '[';
        prompt += article->id;
        prompt += "] ";
        prompt += article->title;
        prompt += ": ";
        prompt += article->body;
        prompt += '\n';
    }
    prompt += "User's question: ";
    prompt += question;
    prompt += '\n';
    prompt += kFormatInstruction;
    return prompt;
}

BatchOutcome generate_answer(LlmClient& client, const std::string& query,
                             const std::vector<const Article*>& articles,
                             int max_retries) {
    const std::string prompt = build_answer_prompt(query, articles);
    for (int attempt = 0; attempt <= max_retries; ++attempt) {
        const std::string raw = client.complete(prompt);
        auto outcome = try_parse_response(raw);
        if (!outcome) continue;

        // Citations outside the shown batch are hallucinated; drop them.
        std::vector<std::string> cited;
        std::unordered_set<std::string_view> seen;
        for (const std::string& id : outcome->cited_article_ids) {
            const bool shown = std::any_of(articles.begin(), articles.end(),
                                           [&](const Article* a) { return a->id == id; });
            if (shown && seen.insert(id).second) cited.push_back(id);
        }
        outcome->cited_article_ids = std::move(cited);
        return *outcome;
    }
    BatchOutcome failed;
    failed.parse_failure = true;
    return failed;
}

AnswerResult active_retrieval(LlmClient& client, const std::string& query,
                              const RankedList& ranked_articles,
                              const RankedList& ranked_chunks,
                              const PipelineConfig& config, const SearchContext& ctx) {
    config.validate();
    if (ranked_articles.empty()) return no_answer_result();

    std::size_t calls = 0;
    bool parse_failure = false;
    std::vector<std::string> shown_order;
    std::unordered_set<std::string> shown;

    const auto run_batch = [&](const std::vector<std::string>& batch_ids)
        -> std::optional<AnswerResult> {
        std::vector<const Article*> batch;
        batch.reserve(batch_ids.size());
        for (const std::string& id : batch_ids) {
            batch.push_back(find_article(ctx, id));
            shown_order.push_back(id);
            shown.insert(id);
        }
        ++calls;
        const BatchOutcome outcome =
            generate_answer(client, query, batch, config.llm_max_retries);
        parse_failure = parse_failure || outcome.parse_failure;
        if (outcome.answerable) return answered_result(outcome);
        return std::nullopt;
    };

    const auto finish = [&](AnswerResult result, bool engaged) {
        result.llm_calls_used = calls;
        result.active_retrieval_engaged = engaged;
        result.parse_failure = parse_failure;
        result.articles_shown = shown_order;
        return result;
    };

    // Phase 1: top articles in batches, stop at the first answer.
    const std::size_t primary =
        std::min(config.primary_article_limit, ranked_articles.size());
    std::vector<std::string> batch_ids;
    for (std::size_t i = 0; i < primary; ++i) {
        batch_ids.push_back(ranked_articles[i].id);
        if (batch_ids.size() == config.batch_size || i + 1 == primary) {
            if (auto result = run_batch(batch_ids)) return finish(*result, false);
            batch_ids.clear();
        }
    }

    // Phase 2: resume the chunk ranking just past the point where the last
    // primary article first appeared, converting chunks of unseen articles.
    std::size_t cut = ranked_chunks.size();
    {
        std::unordered_set<std::string> distinct;
        for (std::size_t i = 0; i < ranked_chunks.size(); ++i) {
            const auto it = ctx.chunk_to_article->find(ranked_chunks[i].id);
            if (it == ctx.chunk_to_article->end())
                throw Error("pipeline: unknown chunk id: " + ranked_chunks[i].id);
            distinct.insert(it->second);
            if (distinct.size() == primary) {
                cut = i + 1;
                break;
            }
        }
    }

    std::size_t consumed = 0;
    std::unordered_set<std::string> pending_set;
    for (std::size_t i = cut; i < ranked_chunks.size() &&
                              consumed < config.active_retrieval_chunk_cap; ++i) {
        ++consumed;
        const auto it = ctx.chunk_to_article->find(ranked_chunks[i].id);
        if (it == ctx.chunk_to_article->end())
            throw Error("pipeline: unknown chunk id: " + ranked_chunks[i].id);
        const std::string& article_id = it->second;
        if (shown.contains(article_id) || !pending_set.insert(article_id).second) continue;
        batch_ids.push_back(article_id);
        if (batch_ids.size() == config.batch_size) {
            if (auto result = run_batch(batch_ids)) return finish(*result, true);
            batch_ids.clear();
            pending_set.clear();
        }
    }
    if (!batch_ids.empty())
        if (auto result = run_batch(batch_ids)) return finish(*result, true);

    return finish(no_answer_result(), true);
}

RankedList rerank_by_answer(const AnswerResult& answer,
                            const std::vector<const Chunk*>& candidates,
                            const SearchContext& ctx) {
    if (candidates.empty()) return {};

    std::vector<const Chunk*> unique;
    std::unordered_set<std::string_view> seen;
    for (const Chunk* chunk : candidates)
        if (seen.insert(chunk->chunk_id).second) unique.push_back(chunk);

    const std::vector<std::string> tokens =
        analyze(answer.answer_text, *ctx.segmenter, *ctx.stopwords);
    const std::vector<float> query_vec = embed_query(*ctx.provider, answer.answer_text);

    RankedList lexical, dense;
    lexical.reserve(unique.size());
    dense.reserve(unique.size());
    for (const Chunk* chunk : unique) {
        lexical.push_back({chunk->chunk_id, ctx.lexical->score(tokens, chunk->chunk_id)});
        dense.push_back(
            {chunk->chunk_id, cosine(query_vec, ctx.dense->vector_of(chunk->chunk_id))});
    }

    FusionConfig weights = ctx.fusion;
    weights.strategy = FusionStrategy::minmax_weighted;
    return fuse(lexical, dense, weights);
}

RankedList hybrid_chunk_search(const SearchContext& ctx, const std::string& query_text,
                               std::size_t k_per_side) {
    const std::vector<std::string> tokens =
        analyze(query_text, *ctx.segmenter, *ctx.stopwords);
    const RankedList lexical = ctx.lexical->search(tokens, k_per_side);
    const std::vector<float> query_vec = embed_query(*ctx.provider, query_text);
    const RankedList dense = ctx.dense->search(query_vec, k_per_side);
    if (ctx.fusion.strategy == FusionStrategy::rrf)
        return rrf_fuse({lexical, dense}, ctx.fusion.rrf_k);
    return fuse(lexical, dense, ctx.fusion);
}

std::pair<AnswerResult, RankedList> answer_pipeline(const SearchContext& ctx,
                                                    LlmClient& client,
                                                    const std::string& raw_query,
                                                    const PipelineConfig& config) {
    require_indexes(ctx);
    config.validate();
    ctx.fusion.validate();

    const std::string normalized = normalize_text(raw_query);
    std::string working = normalized;
    if (config.rewrite_enabled) working = rewrite_query(client, normalized).query;

    std::vector<std::string> sub_queries =
        decompose_query(working, *ctx.segmenter, config.max_query_tokens);
    if (sub_queries.empty()) sub_queries.push_back(working);

    std::vector<RankedList> fused_lists;
    fused_lists.reserve(sub_queries.size());
    for (const std::string& sub : sub_queries)
        fused_lists.push_back(
            hybrid_chunk_search(ctx, sub, ctx.fusion.top_k_per_side));
    RankedList fused = fused_lists.size() == 1 ? std::move(fused_lists.front())
                                               : merge_subquery_results(fused_lists);

    if (ctx.sentinel != nullptr)
        std::erase_if(fused, [&](const ScoredHit& hit) {
            return hit.id == ctx.sentinel->chunk_id;
        });

    const RankedList articles = chunks_to_articles(fused, *ctx.chunk_to_article);
    AnswerResult answer =
        active_retrieval(client, working, articles, fused, config, ctx);

    std::vector<const Chunk*> candidates;
    for (const std::string& article_id : answer.articles_shown) {
        const auto it = ctx.chunks_by_article->find(article_id);
        if (it == ctx.chunks_by_article->end())
            throw Error("pipeline: article has no chunks: " + article_id);
        candidates.insert(candidates.end(), it->second.begin(), it->second.end());
    }
    if (ctx.sentinel != nullptr) candidates.push_back(ctx.sentinel);

    const RankedList reranked = rerank_by_answer(answer, candidates, ctx);

    RankedList references;
    if (answer.status == AnswerStatus::answered) {
        references.reserve(reranked.size());
        for (const ScoredHit& hit : reranked)
            if (ctx.sentinel == nullptr || hit.id != ctx.sentinel->chunk_id)
                references.push_back(hit);
    }
    return {std::move(answer), std::move(references)};
}

} // namespace raglex
