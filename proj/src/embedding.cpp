#include "raglex/embedding.hpp"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "raglex/errors.hpp"
#include "raglex/text.hpp"

namespace raglex {
namespace {

using nlohmann::json;

std::uint64_t fnv1a(std::string_view data, std::uint64_t seed) {
    std::uint64_t hash = seed;
    for (unsigned char c : data) {
        hash ^= c;
        hash *= 1099511628211ULL;
    }
    return hash;
}

constexpr std::uint64_t kBucketSeed = 14695981039346656037ULL;
constexpr std::uint64_t kSignSeed = 0x9e3779b97f4a7c15ULL;

void l2_normalize(std::vector<float>& v) {
    double norm_sq = 0.0;
    for (float x : v) norm_sq += static_cast<double>(x) * x;
    if (norm_sq == 0.0) {
        v.assign(v.size(), 0.0f);
        if (!v.empty()) v[0] = 1.0f;
        return;
    }
    const double inv = 1.0 / std::sqrt(norm_sq);
    for (float& x : v) x = static_cast<float>(x * inv);
}

// Splits "http://host:port/path" into origin and path for httplib.
std::pair<std::string, std::string> split_endpoint(const std::string& endpoint) {
    auto scheme_end = endpoint.find("://");
    const std::size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    const auto path_start = endpoint.find('/', host_start);
    if (path_start == std::string::npos) return {endpoint, "/"};
    return {endpoint.substr(0, path_start), endpoint.substr(path_start)};
}

} // namespace

HashingEmbedder::HashingEmbedder(std::size_t dim) : dim_(dim) {
    if (dim_ < 1) throw ConfigError("embedding dimension must be >= 1");
}

std::vector<float> HashingEmbedder::embed(std::string_view text) const {
    std::vector<float> v(dim_, 0.0f);
    WhitespaceSegmenter segmenter;
    for (const std::string& raw : segmenter.segment(text)) {
        const std::string token = fold_token(raw);
        if (token.empty()) continue;
        const std::size_t bucket = fnv1a(token, kBucketSeed) % dim_;
        const float sign = (fnv1a(token, kSignSeed) & 1) ? 1.0f : -1.0f;
        v[bucket] += sign;
    }
    l2_normalize(v);
    return v;
}

HttpEmbedder::HttpEmbedder(HttpProviderConfig config) : config_(std::move(config)) {
    if (config_.endpoint.empty()) throw ConfigError("embedding endpoint must be set");
    if (config_.dimension < 1) throw ConfigError("embedding dimension must be >= 1");
}

std::vector<float> HttpEmbedder::embed(std::string_view text) const {
    auto [origin, path] = split_endpoint(config_.endpoint);
    const json body = {{"texts", {std::string(text)}}};
    const std::string payload = body.dump();

    std::string last_error = "no attempt made";
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0)
            std::this_thread::sleep_for(std::chrono::milliseconds(config_.backoff_ms * attempt));
        httplib::Client client(origin);
        client.set_connection_timeout(0, config_.timeout_ms * 1000);
        client.set_read_timeout(0, config_.timeout_ms * 1000);
        auto res = client.Post(path, payload, "application/json");
        if (!res) {
            last_error = "connection failed: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status != 200) {
            last_error = "status " + std::to_string(res->status);
            continue;
        }
        try {
            const json parsed = json::parse(res->body);
            const auto& vectors = parsed.at("vectors");
            if (!vectors.is_array() || vectors.empty())
                throw ProviderError("embedding response has no vectors");
            auto v = vectors.at(0).get<std::vector<float>>();
            if (v.size() != config_.dimension)
                throw ProviderError("embedding response has dimension " +
                                    std::to_string(v.size()) + ", expected " +
                                    std::to_string(config_.dimension));
            return v;
        } catch (const json::exception& e) {
            last_error = std::string("malformed response: ") + e.what();
        }
    }
    throw ProviderError("embedding request to " + config_.endpoint +
                        " failed: " + last_error);
}

std::vector<float> embed_query(const EmbeddingProvider& provider, std::string_view text) {
    std::vector<float> v = provider.embed(text);
    if (v.size() != provider.dimension())
        throw ProviderError("provider returned dimension " + std::to_string(v.size()) +
                            ", expected " + std::to_string(provider.dimension()));
    double norm_sq = 0.0;
    for (float x : v) norm_sq += static_cast<double>(x) * x;
    if (norm_sq == 0.0) throw ProviderError("provider returned a zero vector");
    const double inv = 1.0 / std::sqrt(norm_sq);
    for (float& x : v) x = static_cast<float>(x * inv);
    return v;
}

} // namespace raglex
