#include "raglex/providers.hpp"

#include <algorithm>
#include <initializer_list>

#include "raglex/errors.hpp"

namespace raglex {
namespace {

using nlohmann::json;

const std::string kRefusal =
    R"({"answerable": false, "answer": "", "cited_article_ids": []})";

// Rewrite prompts end with "Question: <text>"; answer prompts carry the
// response-format contract. Anything else is echoed refused.
std::string echo_complete(const std::string& prompt) {
    if (prompt.find("cited_article_ids") != std::string::npos) return kRefusal;
    const auto marker = prompt.rfind("Question: ");
    if (marker == std::string::npos) return kRefusal;
    return prompt.substr(marker + 10);
}

} // namespace

std::shared_ptr<const EmbeddingProvider> make_embedding_provider(const json& config) {
    if (!config.is_object() || !config.contains("type"))
        throw ConfigError("provider.type must be set");
    const auto type = config.at("type").get<std::string>();
    if (type == "hash") {
        return std::make_shared<HashingEmbedder>(config.value("dimension", std::size_t{64}));
    }
    if (type == "http") {
        HttpProviderConfig http;
        if (!config.contains("endpoint"))
            throw ConfigError("provider.endpoint must be set for type http");
        http.endpoint = config.at("endpoint").get<std::string>();
        http.dimension = config.value("dimension", http.dimension);
        http.timeout_ms = config.value("timeout_ms", http.timeout_ms);
        http.max_retries = config.value("max_retries", http.max_retries);
        http.backoff_ms = config.value("backoff_ms", http.backoff_ms);
        return std::make_shared<HttpEmbedder>(http);
    }
    throw ConfigError("provider.type must be hash or http, got: " + type);
}

std::shared_ptr<LlmClient> make_llm_client(const json& config) {
    if (!config.is_object() || !config.contains("type"))
        throw ConfigError("llm.type must be set");
    const auto type = config.at("type").get<std::string>();
    if (type == "none") return nullptr;
    if (type == "refuse")
        return std::make_shared<CallbackLlm>([](const std::string&) { return kRefusal; });
    if (type == "echo") return std::make_shared<CallbackLlm>(echo_complete);
    if (type == "scripted") {
        if (!config.contains("path"))
            throw ConfigError("llm.path must be set for type scripted");
        return std::make_shared<ScriptedLlm>(
            ScriptedLlm::from_file(config.at("path").get<std::string>()));
    }
    if (type == "http") {
        HttpLlmConfig http;
        if (!config.contains("endpoint"))
            throw ConfigError("llm.endpoint must be set for type http");
        http.endpoint = config.at("endpoint").get<std::string>();
        http.max_tokens = config.value("max_tokens", http.max_tokens);
        http.timeout_ms = config.value("timeout_ms", http.timeout_ms);
        http.max_retries = config.value("max_retries", http.max_retries);
        http.backoff_ms = config.value("backoff_ms", http.backoff_ms);
        return std::make_shared<HttpLlm>(http);
    }
    throw ConfigError("llm.type must be refuse, echo, scripted, http, or none, got: " +
                      type);
}

namespace {

void reject_unknown(const json& config, std::initializer_list<std::string_view> known,
                    const std::string& prefix) {
    for (const auto& [key, _] : config.items())
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw ConfigError("unknown field " + prefix + "." + key);
}

} // namespace

FusionConfig fusion_config_from_json(const json& config, FusionConfig defaults) {
    if (!config.is_object()) throw ConfigError("fusion config must be an object");
    reject_unknown(config,
                   {"w_lexical", "w_dense", "strategy", "rrf_k", "top_k_per_side"},
                   "fusion");
    FusionConfig out = defaults;
    out.w_lexical = config.value("w_lexical", out.w_lexical);
    out.w_dense = config.value("w_dense", out.w_dense);
    if (config.contains("strategy")) {
        const auto name = config.at("strategy").get<std::string>();
        if (name == "minmax")
            out.strategy = FusionStrategy::minmax_weighted;
        else if (name == "rrf")
            out.strategy = FusionStrategy::rrf;
        else
            throw ConfigError("fusion.strategy must be minmax or rrf, got: " + name);
    }
    out.rrf_k = config.value("rrf_k", out.rrf_k);
    out.top_k_per_side = config.value("top_k_per_side", out.top_k_per_side);
    out.validate();
    return out;
}

PipelineConfig pipeline_config_from_json(const json& config, PipelineConfig defaults) {
    if (!config.is_object()) throw ConfigError("pipeline config must be an object");
    reject_unknown(config,
                   {"batch_size", "primary_article_limit", "active_retrieval_chunk_cap",
                    "rewrite_enabled", "max_query_tokens", "llm_max_retries"},
                   "pipeline");
    PipelineConfig out = defaults;
    out.batch_size = config.value("batch_size", out.batch_size);
    out.primary_article_limit =
        config.value("primary_article_limit", out.primary_article_limit);
    out.active_retrieval_chunk_cap =
        config.value("active_retrieval_chunk_cap", out.active_retrieval_chunk_cap);
    out.rewrite_enabled = config.value("rewrite_enabled", out.rewrite_enabled);
    out.max_query_tokens = config.value("max_query_tokens", out.max_query_tokens);
    out.llm_max_retries = config.value("llm_max_retries", out.llm_max_retries);
    out.validate();
    return out;
}

json to_json(const FusionConfig& config) {
    return {
        {"w_lexical", config.w_lexical},
        {"w_dense", config.w_dense},
        {"strategy", config.strategy == FusionStrategy::rrf ? "rrf" : "minmax"},
        {"rrf_k", config.rrf_k},
        {"top_k_per_side", config.top_k_per_side},
    };
}

json to_json(const PipelineConfig& config) {
    return {
        {"batch_size", config.batch_size},
        {"primary_article_limit", config.primary_article_limit},
        {"active_retrieval_chunk_cap", config.active_retrieval_chunk_cap},
        {"rewrite_enabled", config.rewrite_enabled},
        {"max_query_tokens", config.max_query_tokens},
        {"llm_max_retries", config.llm_max_retries},
    };
}

} // namespace raglex
