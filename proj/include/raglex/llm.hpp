#pragma once

#include <atomic>
#include <functional>
#include <string>
#include <vector>

namespace raglex {

/// Text-completion endpoint. complete() may be called concurrently.
class LlmClient {
public:
    virtual ~LlmClient() = default;
    virtual std::string complete(const std::string& prompt) = 0;
};

/// Replays a fixed list of responses in call order; the last response repeats
/// once the list is exhausted. Deterministic stand-in for tests and offline
/// evaluation.
class ScriptedLlm final : public LlmClient {
public:
    explicit ScriptedLlm(std::vector<std::string> responses);
    ScriptedLlm(ScriptedLlm&& other) noexcept
        : responses_(std::move(other.responses_)), calls_(other.calls_.load()) {}
    static ScriptedLlm from_file(const std::string& path);

    std::string complete(const std::string& prompt) override;
    std::size_t calls() const { return calls_.load(); }

private:
    std::vector<std::string> responses_;
    std::atomic<std::size_t> calls_{0};
};

/// Delegates to an arbitrary function; the prompt is passed through verbatim.
class CallbackLlm final : public LlmClient {
public:
    explicit CallbackLlm(std::function<std::string(const std::string&)> fn)
        : fn_(std::move(fn)) {}
    std::string complete(const std::string& prompt) override { return fn_(prompt); }

private:
    std::function<std::string(const std::string&)> fn_;
};

struct HttpLlmConfig {
    std::string endpoint;  // e.g. http://127.0.0.1:9400/complete
    int max_tokens = 1024;
    int timeout_ms = 30000;
    int max_retries = 2;
    int backoff_ms = 200;
};

/// Remote completion speaking POST {"prompt": ..., "max_tokens": ...,
/// "temperature": 0} -> {"text": ...}. Retries transient failures, then
/// raises ProviderError.
class HttpLlm final : public LlmClient {
public:
    explicit HttpLlm(HttpLlmConfig config);
    std::string complete(const std::string& prompt) override;

private:
    HttpLlmConfig config_;
};

} // namespace raglex
