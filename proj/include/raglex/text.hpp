#pragma once

#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace raglex {

/// Canonicalizes raw text: maps every Unicode whitespace run to a single
/// ASCII space, strips control and zero-width/format characters, drops
/// malformed UTF-8 bytes, and trims the ends. Idempotent.
std::string normalize_text(std::string_view raw);

/// Word segmentation contract. segment("") is the empty list and the same
/// input always yields the same tokens.
class Segmenter {
public:
    virtual ~Segmenter() = default;
    virtual std::vector<std::string> segment(std::string_view text) const = 0;
};

/// Default segmenter: splits on ASCII whitespace. Stands in for external
/// word segmenters that share the same contract.
class WhitespaceSegmenter final : public Segmenter {
public:
    std::vector<std::string> segment(std::string_view text) const override;
};

using StopwordSet = std::unordered_set<std::string>;

/// Loads a stopword list, one token per line (UTF-8, '#' comments allowed).
/// Throws ConfigError when the file cannot be opened.
StopwordSet load_stopwords(const std::string& path);

/// Drops every stoplist member; surviving tokens keep their order.
std::vector<std::string> remove_stopwords(const std::vector<std::string>& tokens,
                                          const StopwordSet& stoplist);

/// Lowercases ASCII letters and strips leading/trailing ASCII punctuation.
/// May return an empty string (pure punctuation token).
std::string fold_token(std::string_view token);

/// Query/document analysis for the lexical index: segment, fold, drop
/// empties and stopwords.
std::vector<std::string> analyze(std::string_view text, const Segmenter& segmenter,
                                 const StopwordSet& stoplist);

/// Keeps the final max_query_tokens tokens of an over-long question; shorter
/// questions come back unchanged (same string).
std::string truncate_query(const std::string& question, const Segmenter& segmenter,
                           std::size_t max_query_tokens = 256);

/// Splits a question into non-overlapping windows of at most max_query_tokens
/// tokens. A question that already fits yields a single-element list; an
/// empty question yields an empty list.
std::vector<std::string> decompose_query(const std::string& question,
                                         const Segmenter& segmenter,
                                         std::size_t max_query_tokens = 256);

} // namespace raglex
