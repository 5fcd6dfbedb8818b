#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "raglex/fusion.hpp"

// Serial, structure-free reference implementations. Tests compare the
// indexed/parallel code paths against these; the benchmark measures the gap.
// Deliberately share no code with the production kernels.
namespace raglex::ref {

/// Direct-formula score of one document against a query over raw token lists.
double bm25_score(const std::vector<std::vector<std::string>>& docs, std::size_t doc,
                  const std::vector<std::string>& query, double k1, double b);

/// All positively scored documents, (score desc, index asc).
std::vector<std::pair<double, std::size_t>> bm25_rank(
    const std::vector<std::vector<std::string>>& docs,
    const std::vector<std::string>& query, double k1, double b);

/// Exhaustive cosine scan with a full sort; top k by (score desc, id asc).
RankedList dense_scan(const std::vector<std::string>& ids,
                      const std::vector<float>& data, std::size_t dim,
                      std::span<const float> query, std::size_t k);

std::vector<double> minmax(const std::vector<double>& scores);

RankedList fuse_weighted(const RankedList& lexical, const RankedList& dense,
                         double w_lexical, double w_dense);

RankedList rrf(const std::vector<RankedList>& lists, double k);

} // namespace raglex::ref
