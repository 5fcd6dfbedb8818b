#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace raglex {

/// Produces one fixed-dimension vector per text. Implementations must be
/// deterministic for a given input and safe to call from multiple threads.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::vector<float> embed(std::string_view text) const = 0;
    virtual std::size_t dimension() const = 0;
};

/// Feature-hashing embedder: each whitespace token is case-folded, hashed to
/// a bucket with a signed contribution, and the sum is L2-normalized. Texts
/// with no tokens map to the first basis vector so every output has unit norm.
class HashingEmbedder final : public EmbeddingProvider {
public:
    explicit HashingEmbedder(std::size_t dim = 64);
    std::vector<float> embed(std::string_view text) const override;
    std::size_t dimension() const override { return dim_; }

private:
    std::size_t dim_;
};

struct HttpProviderConfig {
    std::string endpoint;  // e.g. http://127.0.0.1:9300/embed
    std::size_t dimension = 64;
    int timeout_ms = 5000;
    int max_retries = 2;
    int backoff_ms = 100;
};

/// Remote embedder speaking POST {"texts": [...]} -> {"vectors": [[...]]}.
/// Transient failures are retried with linear backoff; exhaustion raises
/// ProviderError.
class HttpEmbedder final : public EmbeddingProvider {
public:
    explicit HttpEmbedder(HttpProviderConfig config);
    std::vector<float> embed(std::string_view text) const override;
    std::size_t dimension() const override { return config_.dimension; }

private:
    HttpProviderConfig config_;
};

/// Embeds a query and re-normalizes to unit length. A zero vector from the
/// provider is treated as a provider failure.
std::vector<float> embed_query(const EmbeddingProvider& provider, std::string_view text);

} // namespace raglex
