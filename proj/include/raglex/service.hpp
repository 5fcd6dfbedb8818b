#pragma once

#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

#include "raglex/engine.hpp"

namespace httplib {
class Server;
}

namespace raglex {

struct ServiceConfig {
    std::string corpus_dir;
    std::string lexical_index_dir;
    std::string dense_index_dir;
    std::string stopwords_file;
    nlohmann::json provider = {{"type", "hash"}, {"dimension", 64}};
    nlohmann::json llm = {{"type", "refuse"}};
    FusionConfig fusion;
    PipelineConfig pipeline;
    std::string listen = "127.0.0.1:8080";
    int request_timeout_ms = 30000;

    /// Reads a JSON config file, then applies RAGLEX_* environment overrides
    /// (RAGLEX_LISTEN, RAGLEX_CORPUS_DIR, RAGLEX_LEXICAL_INDEX_DIR,
    /// RAGLEX_DENSE_INDEX_DIR, RAGLEX_STOPWORDS_FILE,
    /// RAGLEX_REQUEST_TIMEOUT_MS).
    static ServiceConfig from_file(const std::string& path);

    /// Throws ConfigError naming the offending field.
    void validate() const;
};

/// Loads corpus and indexes from the configured paths and assembles an
/// engine. Fails fast on any mismatch (e.g. provider dimension).
std::shared_ptr<const Engine> make_engine(const ServiceConfig& config);

/// Response bodies shared by the HTTP endpoints and the CLI, so both surfaces
/// return identical JSON for the same engine and query. strategy may be
/// "minmax", "rrf", or empty for the engine's configured fusion.
nlohmann::json search_response(const Engine& engine, const std::string& query,
                               std::size_t k, const std::string& strategy = "");
nlohmann::json ask_response(const Engine& engine, const std::string& query);

/// HTTP front end over an engine. Endpoints:
///   GET  /health         -> {status, corpus_stats}
///   POST /search         -> {query, strategy, articles: [...]}
///   POST /ask            -> {status, answer, references, llm_calls_used, ...}
///   POST /admin/reindex  -> reloads from disk, swaps atomically
/// Handlers share one immutable engine snapshot per request; reindex swaps
/// the pointer, so in-flight requests finish on the old snapshot. One JSON
/// log line is written per request.
class Service {
public:
    explicit Service(ServiceConfig config);
    ~Service();

    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// Binds and serves on the calling thread; returns when stop() is called.
    int run();

    /// Binds (an ephemeral port when the configured port is 0) and serves on
    /// a background thread. Returns once the server accepts connections.
    void start_async();
    void stop();

    int port() const { return port_; }
    std::shared_ptr<const Engine> engine_snapshot() const;

private:
    void install_routes();
    int bind();

    ServiceConfig config_;
    std::shared_ptr<const Engine> engine_;
    mutable std::mutex engine_mutex_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    int port_ = 0;
};

} // namespace raglex
