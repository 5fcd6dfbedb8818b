#pragma once

#include <span>
#include <string>
#include <vector>

#include "raglex/corpus.hpp"
#include "raglex/embedding.hpp"
#include "raglex/fusion.hpp"
#include "raglex/hnsw.hpp"

namespace raglex {

enum class DenseMode { exact, hnsw };

std::string to_string(DenseMode mode);
DenseMode dense_mode_from_string(const std::string& name);

/// Cosine similarity in [-1, 1]. Throws on dimension mismatch or a zero
/// vector. Accumulates in double regardless of input precision.
double cosine(std::span<const float> a, std::span<const float> b);

/// Vector store over chunk dense_text embeddings. Rows are unit-normalized
/// and held in chunk-id order; exact mode scans all rows, hnsw mode routes
/// through a navigable small-world graph.
class DenseIndex {
public:
    DenseIndex() = default;

    /// Embeds every chunk with the provider. threads = 0 means the runtime
    /// default. Throws BuildError on an empty corpus, a provider failure
    /// (naming the chunk), or a dimension mismatch.
    static DenseIndex build(const std::vector<Chunk>& chunks,
                            const EmbeddingProvider& provider, DenseMode mode,
                            HnswParams graph_params = {}, int threads = 0);

    /// Top-k by cosine similarity, descending, ties by ascending chunk id.
    /// Throws when k < 1 or the query dimension differs; k is clamped to the
    /// store size.
    RankedList search(std::span<const float> query, std::size_t k) const;

    /// Stored (unit) vector for a chunk. Throws on an unknown id.
    std::span<const float> vector_of(const std::string& chunk_id) const;

    const std::vector<std::string>& ids() const { return ids_; }
    std::size_t size() const { return ids_.size(); }
    std::size_t dimension() const { return dim_; }
    DenseMode mode() const { return mode_; }
    const HnswParams& graph_params() const { return graph_params_; }

    /// Directory layout: vectors.bin (one JSON header line, then row-major
    /// little-endian f32), ids.txt (one chunk id per line, ascending), and
    /// graph.bin when the mode is hnsw.
    void save(const std::string& dir) const;
    static DenseIndex load(const std::string& dir);

private:
    RankedList exact_search(std::span<const float> query, std::size_t k) const;

    std::vector<std::string> ids_;  // ascending; row i belongs to ids_[i]
    std::vector<float> data_;       // ids_.size() * dim_, row-major
    std::size_t dim_ = 0;
    DenseMode mode_ = DenseMode::exact;
    HnswParams graph_params_;
    HnswGraph graph_;
};

} // namespace raglex
