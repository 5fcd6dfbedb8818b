#include "raglex/llm.hpp"

#include <chrono>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "raglex/errors.hpp"

namespace raglex {
namespace {

using nlohmann::json;

std::pair<std::string, std::string> split_endpoint(const std::string& endpoint) {
    auto scheme_end = endpoint.find("://");
    const std::size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    const auto path_start = endpoint.find('/', host_start);
    if (path_start == std::string::npos) return {endpoint, "/"};
    return {endpoint.substr(0, path_start), endpoint.substr(path_start)};
}

} // namespace

ScriptedLlm::ScriptedLlm(std::vector<std::string> responses)
    : responses_(std::move(responses)) {
    if (responses_.empty()) throw ConfigError("scripted responses must not be empty");
}

ScriptedLlm ScriptedLlm::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path);
    // One JSON string or object per line; objects are replayed verbatim.
    std::vector<std::string> responses;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            const json parsed = json::parse(line);
            responses.push_back(parsed.is_string() ? parsed.get<std::string>()
                                                   : parsed.dump());
        } catch (const json::exception& e) {
            throw IoError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return ScriptedLlm(std::move(responses));
}

std::string ScriptedLlm::complete(const std::string&) {
    const std::size_t n = calls_.fetch_add(1);
    return responses_[std::min(n, responses_.size() - 1)];
}

HttpLlm::HttpLlm(HttpLlmConfig config) : config_(std::move(config)) {
    if (config_.endpoint.empty()) throw ConfigError("completion endpoint must be set");
}

std::string HttpLlm::complete(const std::string& prompt) {
    auto [origin, path] = split_endpoint(config_.endpoint);
    const json body = {
        {"prompt", prompt},
        {"max_tokens", config_.max_tokens},
        {"temperature", 0},
    };
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
            return json::parse(res->body).at("text").get<std::string>();
        } catch (const json::exception& e) {
            last_error = std::string("malformed response: ") + e.what();
        }
    }
    throw ProviderError("completion request to " + config_.endpoint +
                        " failed: " + last_error);
}

} // namespace raglex
