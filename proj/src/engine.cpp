#include "raglex/engine.hpp"

#include <algorithm>

#include "raglex/errors.hpp"

namespace raglex {

Engine::Engine(Corpus corpus, Bm25Index lexical, DenseIndex dense,
               std::shared_ptr<const EmbeddingProvider> provider,
               std::shared_ptr<LlmClient> llm, StopwordSet stopwords,
               FusionConfig fusion, PipelineConfig pipeline)
    : corpus_(std::move(corpus)),
      lexical_(std::move(lexical)),
      dense_(std::move(dense)),
      provider_(std::move(provider)),
      llm_(std::move(llm)),
      stopwords_(std::move(stopwords)),
      fusion_(fusion),
      pipeline_(pipeline) {
    if (provider_ == nullptr) throw ConfigError("engine: embedding provider must be set");
    fusion_.validate();
    pipeline_.validate();

    for (const Article& article : corpus_.articles) {
        if (!article_by_id_.emplace(article.id, &article).second)
            throw BuildError("engine: duplicate article id: " + article.id);
    }
    for (const Chunk& chunk : corpus_.chunks) {
        if (!chunk_by_id_.emplace(chunk.chunk_id, &chunk).second)
            throw BuildError("engine: duplicate chunk id: " + chunk.chunk_id);
        chunk_to_article_.emplace(chunk.chunk_id, chunk.article_id);
        if (chunk.is_sentinel) {
            sentinel_ = &chunk;
            continue;  // the sentinel belongs to no article
        }
        if (!article_by_id_.contains(chunk.article_id))
            throw BuildError("engine: chunk " + chunk.chunk_id +
                             " references unknown article " + chunk.article_id);
        chunks_by_article_[chunk.article_id].push_back(&chunk);
    }
    for (auto& [id, chunks] : chunks_by_article_)
        std::sort(chunks.begin(), chunks.end(), [](const Chunk* a, const Chunk* b) {
            return a->chunk_index < b->chunk_index;
        });
}

SearchContext Engine::context() const {
    SearchContext ctx;
    ctx.lexical = &lexical_;
    ctx.dense = &dense_;
    ctx.provider = provider_.get();
    ctx.segmenter = &segmenter_;
    ctx.stopwords = &stopwords_;
    ctx.fusion = fusion_;
    ctx.article_by_id = &article_by_id_;
    ctx.chunk_to_article = &chunk_to_article_;
    ctx.chunks_by_article = &chunks_by_article_;
    ctx.sentinel = sentinel_;
    return ctx;
}

std::vector<ArticleHit> Engine::search(const std::string& raw_query,
                                       std::size_t k) const {
    return search(raw_query, k, fusion_);
}

std::vector<ArticleHit> Engine::search(const std::string& raw_query, std::size_t k,
                                       const FusionConfig& fusion) const {
    if (k < 1) throw Error("search: k must be >= 1");
    fusion.validate();
    const std::string query =
        truncate_query(normalize_text(raw_query), segmenter_, pipeline_.max_query_tokens);

    SearchContext ctx = context();
    ctx.fusion = fusion;
    RankedList fused = hybrid_chunk_search(ctx, query, fusion.top_k_per_side);
    if (sentinel_ != nullptr)
        std::erase_if(fused,
                      [&](const ScoredHit& hit) { return hit.id == sentinel_->chunk_id; });

    std::vector<ArticleHit> hits;
    std::unordered_map<std::string, std::size_t> slot_of;
    for (const ScoredHit& hit : fused) {
        const std::string& article_id = chunk_to_article_.at(hit.id);
        auto [it, fresh] = slot_of.emplace(article_id, hits.size());
        if (fresh) {
            if (hits.size() == k) {
                slot_of.erase(it);
                continue;  // article set is full; keep filling chunk evidence
            }
            hits.push_back({article_id, hit.score, {}});
        }
        hits[it->second].chunks.push_back(hit);
    }
    return hits;
}

std::pair<AnswerResult, RankedList> Engine::ask(const std::string& raw_query) const {
    if (llm_ == nullptr) throw ConfigError("engine: no completion client configured");
    return answer_pipeline(context(), *llm_, raw_query, pipeline_);
}

const Article* Engine::article(const std::string& id) const {
    const auto it = article_by_id_.find(id);
    return it == article_by_id_.end() ? nullptr : it->second;
}

const Chunk* Engine::chunk(const std::string& id) const {
    const auto it = chunk_by_id_.find(id);
    return it == chunk_by_id_.end() ? nullptr : it->second;
}

} // namespace raglex
