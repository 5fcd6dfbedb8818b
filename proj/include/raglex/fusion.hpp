#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

namespace raglex {

struct ScoredHit {
    std::string id;
    double score = 0.0;

    friend bool operator==(const ScoredHit&, const ScoredHit&) = default;
};

/// Entries in non-increasing score order, ids unique. Ties everywhere are
/// broken by ascending id so results are deterministic.
using RankedList = std::vector<ScoredHit>;

enum class FusionStrategy { minmax_weighted, rrf };

struct FusionConfig {
    double w_lexical = 0.5;
    double w_dense = 0.5;
    FusionStrategy strategy = FusionStrategy::minmax_weighted;
    double rrf_k = 60.0;
    std::size_t top_k_per_side = 100; // retrieval depth normalization operates on

    void validate() const; // throws ConfigError naming the field
};

/// Maps each score to (s - min) / (max - min). Degenerate cases: empty in,
/// empty out; when max == min (singleton or uniform list) every entry maps
/// to 1.0 since all are jointly maximal.
RankedList minmax_normalize(const RankedList& list);

/// Min-max normalizes both sides independently, then combines per item as
/// w_lexical * lexical + w_dense * dense, scoring a missing side as 0.
RankedList fuse(const RankedList& lexical, const RankedList& dense,
                const FusionConfig& config);

/// Reciprocal rank fusion: score(item) = sum over lists of 1/(rrf_k + rank)
/// with rank starting at 1. Rank-based baseline; input scores only determine
/// order.
RankedList rrf_fuse(const std::vector<RankedList>& lists, double rrf_k = 60.0);

/// Collapses a chunk ranking to an article ranking: each article appears once,
/// at the position and score of its best (first-appearing) chunk. Throws on a
/// chunk id missing from the provenance map.
RankedList chunks_to_articles(const RankedList& ranked_chunks,
                              const std::unordered_map<std::string, std::string>& chunk_to_article);

/// Combines per-sub-query result lists: min-max normalize each, keep the
/// per-item maximum across lists.
RankedList merge_subquery_results(const std::vector<RankedList>& lists);

} // namespace raglex
