#pragma once

#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "raglex/bm25.hpp"
#include "raglex/corpus.hpp"
#include "raglex/dense.hpp"
#include "raglex/embedding.hpp"
#include "raglex/fusion.hpp"
#include "raglex/llm.hpp"
#include "raglex/pipeline.hpp"
#include "raglex/text.hpp"

namespace raglex {

struct ArticleHit {
    std::string article_id;
    double score = 0.0;    // best fused chunk score
    RankedList chunks;     // this article's hits, fused order
};

/// Owns a corpus, both indexes, and the providers, and answers queries over
/// them. Immutable once constructed; safe for concurrent reads.
class Engine {
public:
    Engine(Corpus corpus, Bm25Index lexical, DenseIndex dense,
           std::shared_ptr<const EmbeddingProvider> provider,
           std::shared_ptr<LlmClient> llm, StopwordSet stopwords,
           FusionConfig fusion = {}, PipelineConfig pipeline = {});

    Engine(const Engine&) = delete;
    Engine& operator=(const Engine&) = delete;

    /// Hybrid search aggregated to articles. The query is normalized and
    /// truncated to its final max_query_tokens tokens; the sentinel never
    /// appears. Throws when k < 1. The overload swaps in a different fusion
    /// setup for this call only.
    std::vector<ArticleHit> search(const std::string& raw_query, std::size_t k) const;
    std::vector<ArticleHit> search(const std::string& raw_query, std::size_t k,
                                   const FusionConfig& fusion) const;

    /// Full answering flow; references exclude the sentinel and are empty on
    /// a no-answer outcome.
    std::pair<AnswerResult, RankedList> ask(const std::string& raw_query) const;

    SearchContext context() const;

    const Corpus& corpus() const { return corpus_; }
    const Bm25Index& lexical() const { return lexical_; }
    const DenseIndex& dense() const { return dense_; }
    const EmbeddingProvider& provider() const { return *provider_; }
    const FusionConfig& fusion() const { return fusion_; }
    const PipelineConfig& pipeline() const { return pipeline_; }
    const StopwordSet& stopwords() const { return stopwords_; }
    const Segmenter& segmenter() const { return segmenter_; }

    const Article* article(const std::string& id) const;
    const Chunk* chunk(const std::string& id) const;
    std::size_t article_count() const { return corpus_.articles.size(); }
    std::size_t chunk_count() const { return corpus_.chunks.size(); }

private:
    Corpus corpus_;
    Bm25Index lexical_;
    DenseIndex dense_;
    std::shared_ptr<const EmbeddingProvider> provider_;
    std::shared_ptr<LlmClient> llm_;
    StopwordSet stopwords_;
    WhitespaceSegmenter segmenter_;
    FusionConfig fusion_;
    PipelineConfig pipeline_;

    std::unordered_map<std::string, const Article*> article_by_id_;
    std::unordered_map<std::string, const Chunk*> chunk_by_id_;
    std::unordered_map<std::string, std::string> chunk_to_article_;
    std::unordered_map<std::string, std::vector<const Chunk*>> chunks_by_article_;
    const Chunk* sentinel_ = nullptr;
};

} // namespace raglex
