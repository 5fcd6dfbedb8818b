#include "raglex/ref.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace raglex::ref {
namespace {

std::size_t count_occurrences(const std::vector<std::string>& tokens,
                              const std::string& term) {
    std::size_t n = 0;
    for (const std::string& token : tokens)
        if (token == term) ++n;
    return n;
}

std::size_t doc_frequency(const std::vector<std::vector<std::string>>& docs,
                          const std::string& term) {
    std::size_t n = 0;
    for (const auto& doc : docs)
        if (count_occurrences(doc, term) > 0) ++n;
    return n;
}

double average_length(const std::vector<std::vector<std::string>>& docs) {
    double total = 0.0;
    for (const auto& doc : docs) total += static_cast<double>(doc.size());
    return total / static_cast<double>(docs.size());
}

void sort_hits(RankedList& hits) {
    std::sort(hits.begin(), hits.end(), [](const ScoredHit& a, const ScoredHit& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.id < b.id;
    });
}

} // namespace

double bm25_score(const std::vector<std::vector<std::string>>& docs, std::size_t doc,
                  const std::vector<std::string>& query, double k1, double b) {
    const double N = static_cast<double>(docs.size());
    const double avgdl = average_length(docs);
    const double dl = static_cast<double>(docs[doc].size());
    double total = 0.0;
    for (const std::string& term : query) {
        const double tf = static_cast<double>(count_occurrences(docs[doc], term));
        if (tf == 0.0) continue;
        const double n = static_cast<double>(doc_frequency(docs, term));
        const double idf = std::log((N - n + 0.5) / (n + 0.5) + 1.0);
        total += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * dl / avgdl));
    }
    return total;
}

std::vector<std::pair<double, std::size_t>> bm25_rank(
    const std::vector<std::vector<std::string>>& docs,
    const std::vector<std::string>& query, double k1, double b) {
    std::vector<std::pair<double, std::size_t>> hits;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        const double score = bm25_score(docs, i, query, k1, b);
        if (score > 0.0) hits.emplace_back(score, i);
    }
    std::sort(hits.begin(), hits.end(), [](const auto& a, const auto& b2) {
        if (a.first != b2.first) return a.first > b2.first;
        return a.second < b2.second;
    });
    return hits;
}

RankedList dense_scan(const std::vector<std::string>& ids,
                      const std::vector<float>& data, std::size_t dim,
                      std::span<const float> query, std::size_t k) {
    double qnorm = 0.0;
    for (float x : query) qnorm += static_cast<double>(x) * x;
    qnorm = std::sqrt(qnorm);

    RankedList hits;
    hits.reserve(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const float* row = data.data() + i * dim;
        double dot = 0.0, rnorm = 0.0;
        for (std::size_t d = 0; d < dim; ++d) {
            dot += static_cast<double>(row[d]) * query[d];
            rnorm += static_cast<double>(row[d]) * row[d];
        }
        const double score =
            std::clamp(dot / (std::sqrt(rnorm) * qnorm), -1.0, 1.0);
        hits.push_back({ids[i], score});
    }
    sort_hits(hits);
    if (hits.size() > k) hits.resize(k);
    return hits;
}

std::vector<double> minmax(const std::vector<double>& scores) {
    if (scores.empty()) return {};
    const auto [lo_it, hi_it] = std::minmax_element(scores.begin(), scores.end());
    const double lo = *lo_it, hi = *hi_it;
    std::vector<double> out;
    out.reserve(scores.size());
    for (double s : scores) out.push_back(hi == lo ? 1.0 : (s - lo) / (hi - lo));
    return out;
}

RankedList fuse_weighted(const RankedList& lexical, const RankedList& dense,
                         double w_lexical, double w_dense) {
    std::vector<double> lex_scores, den_scores;
    for (const ScoredHit& hit : lexical) lex_scores.push_back(hit.score);
    for (const ScoredHit& hit : dense) den_scores.push_back(hit.score);
    const std::vector<double> lex_norm = minmax(lex_scores);
    const std::vector<double> den_norm = minmax(den_scores);

    std::map<std::string, double> combined;
    for (std::size_t i = 0; i < lexical.size(); ++i)
        combined[lexical[i].id] += w_lexical * lex_norm[i];
    for (std::size_t i = 0; i < dense.size(); ++i)
        combined[dense[i].id] += w_dense * den_norm[i];

    RankedList out;
    for (const auto& [id, score] : combined) out.push_back({id, score});
    sort_hits(out);
    return out;
}

RankedList rrf(const std::vector<RankedList>& lists, double k) {
    std::map<std::string, double> combined;
    for (const RankedList& list : lists)
        for (std::size_t rank = 0; rank < list.size(); ++rank)
            combined[list[rank].id] += 1.0 / (k + static_cast<double>(rank) + 1.0);
    RankedList out;
    for (const auto& [id, score] : combined) out.push_back({id, score});
    sort_hits(out);
    return out;
}

} // namespace raglex::ref
