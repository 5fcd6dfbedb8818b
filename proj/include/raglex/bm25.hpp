#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "raglex/corpus.hpp"
#include "raglex/fusion.hpp"

namespace raglex {

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.65;
};

/// Inverted index over chunk lexical_tokens with BM25 scoring.
///
/// score(D, Q) = sum over query tokens of
///   idf(q) * tf * (k1 + 1) / (tf + k1 * (1 - b + b * |D| / avgdl))
/// with idf(q) = ln((N - n + 0.5) / (n + 0.5) + 1). Repeated query tokens
/// contribute once per occurrence. Immutable after build.
class Bm25Index {
public:
    Bm25Index() = default;

    /// Throws BuildError on an empty corpus or duplicate chunk ids.
    static Bm25Index build(const std::vector<Chunk>& chunks, Bm25Params params = {});

    /// Inverse document frequency; strictly positive, decreasing in document
    /// frequency. Unseen terms use n = 0.
    double idf(std::string_view term) const;

    /// BM25 score of one indexed chunk. Throws on an unknown chunk id.
    double score(const std::vector<std::string>& query_tokens,
                 const std::string& chunk_id) const;

    /// Top-k chunks by BM25 score, descending, ties by ascending chunk id.
    /// Chunks matching no query term are excluded. Throws when k < 1.
    RankedList search(const std::vector<std::string>& query_tokens, std::size_t k) const;

    std::size_t doc_count() const { return ids_.size(); }
    double avgdl() const { return avgdl_; }
    const Bm25Params& params() const { return params_; }
    const std::vector<std::string>& ids() const { return ids_; }

    /// Document frequency of a term (0 when unseen).
    std::size_t doc_frequency(std::string_view term) const;

    /// Directory layout: manifest.json + docs.tsv + postings.bin (terms
    /// sorted; per term: varint-length term bytes, doc frequency, then
    /// delta-encoded doc ordinals with term frequencies).
    void save(const std::string& dir) const;
    static Bm25Index load(const std::string& dir);

private:
    struct Posting {
        std::uint32_t doc = 0;
        std::uint32_t tf = 0;
    };

    double doc_score(const std::vector<Posting>& postings, double idf_value,
                     std::uint32_t ordinal) const;

    std::vector<std::string> ids_;        // chunk ids, ascending; index = ordinal
    std::vector<std::uint32_t> lengths_;  // |D| per ordinal
    std::unordered_map<std::string, std::vector<Posting>> postings_;
    std::unordered_map<std::string, std::uint32_t> ordinal_of_;
    double avgdl_ = 0.0;
    Bm25Params params_;
};

} // namespace raglex
