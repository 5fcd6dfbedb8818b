#include "raglex/fusion.hpp"

#include <algorithm>
#include <cmath>

#include "raglex/errors.hpp"

namespace raglex {

namespace {

void sort_ranked(RankedList& list) {
    std::sort(list.begin(), list.end(), [](const ScoredHit& a, const ScoredHit& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.id < b.id;
    });
}

} // namespace

void FusionConfig::validate() const {
    if (w_lexical < 0.0 || w_dense < 0.0) {
        throw ConfigError("fusion: w_lexical and w_dense must be >= 0");
    }
    if (std::abs(w_lexical + w_dense - 1.0) > 1e-9) {
        throw ConfigError("fusion: w_lexical + w_dense must equal 1");
    }
    if (rrf_k <= 0.0) throw ConfigError("fusion: rrf_k must be positive");
    if (top_k_per_side == 0) throw ConfigError("fusion: top_k_per_side must be >= 1");
}

RankedList minmax_normalize(const RankedList& list) {
    if (list.empty()) return {};
    double lo = list.front().score;
    double hi = list.front().score;
    for (const auto& hit : list) {
        lo = std::min(lo, hit.score);
        hi = std::max(hi, hit.score);
    }
    RankedList out;
    out.reserve(list.size());
    for (const auto& hit : list) {
        const double norm = (hi > lo) ? (hit.score - lo) / (hi - lo) : 1.0;
        out.push_back({hit.id, norm});
    }
    return out;
}

RankedList fuse(const RankedList& lexical, const RankedList& dense,
                const FusionConfig& config) {
    const RankedList norm_lex = minmax_normalize(lexical);
    const RankedList norm_den = minmax_normalize(dense);

    std::unordered_map<std::string, double> combined;
    combined.reserve(norm_lex.size() + norm_den.size());
    for (const auto& hit : norm_lex) combined[hit.id] += config.w_lexical * hit.score;
    for (const auto& hit : norm_den) combined[hit.id] += config.w_dense * hit.score;

    RankedList out;
    out.reserve(combined.size());
    for (auto& [id, score] : combined) out.push_back({id, score});
    sort_ranked(out);
    return out;
}

RankedList rrf_fuse(const std::vector<RankedList>& lists, double rrf_k) {
    std::unordered_map<std::string, double> accum;
    for (const auto& list : lists) {
        for (std::size_t rank = 0; rank < list.size(); ++rank) {
            accum[list[rank].id] += 1.0 / (rrf_k + static_cast<double>(rank + 1));
        }
    }
    RankedList out;
    out.reserve(accum.size());
    for (auto& [id, score] : accum) out.push_back({id, score});
    sort_ranked(out);
    return out;
}

RankedList chunks_to_articles(const RankedList& ranked_chunks,
                              const std::unordered_map<std::string, std::string>& chunk_to_article) {
    RankedList out;
    std::unordered_map<std::string, bool> seen;
    for (const auto& hit : ranked_chunks) {
        const auto it = chunk_to_article.find(hit.id);
        if (it == chunk_to_article.end()) {
            throw Error("chunks_to_articles: unknown chunk id: " + hit.id);
        }
        if (seen.emplace(it->second, true).second) {
            out.push_back({it->second, hit.score});
        }
    }
    return out;
}

RankedList merge_subquery_results(const std::vector<RankedList>& lists) {
    std::unordered_map<std::string, double> best;
    for (const auto& list : lists) {
        for (const auto& hit : minmax_normalize(list)) {
            auto [it, inserted] = best.emplace(hit.id, hit.score);
            if (!inserted) it->second = std::max(it->second, hit.score);
        }
    }
    RankedList out;
    out.reserve(best.size());
    for (auto& [id, score] : best) out.push_back({id, score});
    sort_ranked(out);
    return out;
}

} // namespace raglex
