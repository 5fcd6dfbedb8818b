#pragma once

#include <memory>

#include <nlohmann/json.hpp>

#include "raglex/embedding.hpp"
#include "raglex/fusion.hpp"
#include "raglex/llm.hpp"
#include "raglex/pipeline.hpp"

namespace raglex {

/// Builds an embedding provider from config:
///   {"type": "hash", "dimension": 64}
///   {"type": "http", "endpoint": "...", "dimension": N, "timeout_ms": ...,
///    "max_retries": ..., "backoff_ms": ...}
/// Throws ConfigError naming the offending field.
std::shared_ptr<const EmbeddingProvider> make_embedding_provider(
    const nlohmann::json& config);

/// Builds a completion client from config:
///   {"type": "refuse"}              — structured refusal to every prompt
///   {"type": "echo"}                — answers rewrite prompts with the
///                                      question itself, refuses the rest
///   {"type": "scripted", "path"}    — replays a response script file
///   {"type": "http", "endpoint", "max_tokens", "timeout_ms", ...}
/// Returns nullptr for {"type": "none"} (search-only deployments).
std::shared_ptr<LlmClient> make_llm_client(const nlohmann::json& config);

/// Overlay JSON fields onto defaults; unknown fields are rejected. Validated
/// before returning.
FusionConfig fusion_config_from_json(const nlohmann::json& config,
                                     FusionConfig defaults = {});
PipelineConfig pipeline_config_from_json(const nlohmann::json& config,
                                         PipelineConfig defaults = {});

nlohmann::json to_json(const FusionConfig& config);
nlohmann::json to_json(const PipelineConfig& config);

} // namespace raglex
