#include "raglex/service.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include <httplib.h>

#include "raglex/errors.hpp"
#include "raglex/providers.hpp"

namespace raglex {
namespace {

using nlohmann::json;

std::pair<std::string, int> parse_listen(const std::string& listen) {
    const auto colon = listen.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == listen.size())
        throw ConfigError("service.listen must be host:port, got: " + listen);
    int port = 0;
    try {
        port = std::stoi(listen.substr(colon + 1));
    } catch (const std::exception&) {
        throw ConfigError("service.listen has a non-numeric port: " + listen);
    }
    if (port < 0 || port > 65535)
        throw ConfigError("service.listen port out of range: " + listen);
    return {listen.substr(0, colon), port};
}

void apply_env_overrides(ServiceConfig& config) {
    const auto get = [](const char* name) { return std::getenv(name); };
    if (const char* v = get("RAGLEX_LISTEN")) config.listen = v;
    if (const char* v = get("RAGLEX_CORPUS_DIR")) config.corpus_dir = v;
    if (const char* v = get("RAGLEX_LEXICAL_INDEX_DIR")) config.lexical_index_dir = v;
    if (const char* v = get("RAGLEX_DENSE_INDEX_DIR")) config.dense_index_dir = v;
    if (const char* v = get("RAGLEX_STOPWORDS_FILE")) config.stopwords_file = v;
    if (const char* v = get("RAGLEX_REQUEST_TIMEOUT_MS"))
        config.request_timeout_ms = std::atoi(v);
}

void log_line(const json& entry) {
    static std::mutex log_mutex;
    std::lock_guard lock(log_mutex);
    std::cout << entry.dump() << '\n' << std::flush;
}

void log_request(const std::string& method, const std::string& path, int status,
                 double duration_ms) {
    const auto now = std::chrono::system_clock::now().time_since_epoch();
    log_line({
        {"ts", std::chrono::duration_cast<std::chrono::milliseconds>(now).count()},
        {"method", method},
        {"path", path},
        {"status", status},
        {"duration_ms", duration_ms},
    });
}

void set_error(httplib::Response& res, int status, const std::string& message) {
    res.status = status;
    res.set_content(json{{"error", message}}.dump(), "application/json");
}

void set_ok(httplib::Response& res, const json& body) {
    res.status = 200;
    res.set_content(body.dump(), "application/json");
}

} // namespace

ServiceConfig ServiceConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("config not found: " + path);
    json parsed;
    try {
        in >> parsed;
    } catch (const json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }

    ServiceConfig config;
    try {
        config.corpus_dir = parsed.at("corpus_dir").get<std::string>();
        config.lexical_index_dir = parsed.at("lexical_index_dir").get<std::string>();
        config.dense_index_dir = parsed.at("dense_index_dir").get<std::string>();
        config.stopwords_file = parsed.at("stopwords_file").get<std::string>();
        if (parsed.contains("provider")) config.provider = parsed.at("provider");
        if (parsed.contains("llm")) config.llm = parsed.at("llm");
        if (parsed.contains("fusion"))
            config.fusion = fusion_config_from_json(parsed.at("fusion"));
        if (parsed.contains("pipeline"))
            config.pipeline = pipeline_config_from_json(parsed.at("pipeline"));
        config.listen = parsed.value("listen", config.listen);
        config.request_timeout_ms =
            parsed.value("request_timeout_ms", config.request_timeout_ms);
    } catch (const json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    apply_env_overrides(config);
    config.validate();
    return config;
}

void ServiceConfig::validate() const {
    if (corpus_dir.empty()) throw ConfigError("service.corpus_dir must be set");
    if (lexical_index_dir.empty())
        throw ConfigError("service.lexical_index_dir must be set");
    if (dense_index_dir.empty())
        throw ConfigError("service.dense_index_dir must be set");
    if (stopwords_file.empty()) throw ConfigError("service.stopwords_file must be set");
    if (request_timeout_ms < 1)
        throw ConfigError("service.request_timeout_ms must be >= 1");
    parse_listen(listen);
    fusion.validate();
    pipeline.validate();
}

std::shared_ptr<const Engine> make_engine(const ServiceConfig& config) {
    config.validate();
    Corpus corpus = load_corpus(config.corpus_dir);
    StopwordSet stopwords = load_stopwords(config.stopwords_file);
    auto provider = make_embedding_provider(config.provider);
    Bm25Index lexical = Bm25Index::load(config.lexical_index_dir);
    DenseIndex dense = DenseIndex::load(config.dense_index_dir);
    if (provider->dimension() != dense.dimension())
        throw ConfigError("service.provider: dimension " +
                          std::to_string(provider->dimension()) +
                          " does not match the dense index (" +
                          std::to_string(dense.dimension()) + ")");
    auto llm = make_llm_client(config.llm);
    return std::make_shared<const Engine>(std::move(corpus), std::move(lexical),
                                          std::move(dense), std::move(provider),
                                          std::move(llm), std::move(stopwords),
                                          config.fusion, config.pipeline);
}

json search_response(const Engine& engine, const std::string& query, std::size_t k,
                     const std::string& strategy) {
    FusionConfig fusion = engine.fusion();
    if (strategy == "minmax")
        fusion.strategy = FusionStrategy::minmax_weighted;
    else if (strategy == "rrf")
        fusion.strategy = FusionStrategy::rrf;
    else if (!strategy.empty())
        throw ConfigError("strategy must be minmax or rrf, got: " + strategy);

    const std::vector<ArticleHit> hits = engine.search(query, k, fusion);
    json articles = json::array();
    for (const ArticleHit& hit : hits) {
        json chunks = json::array();
        for (const ScoredHit& chunk : hit.chunks) {
            chunks.push_back({
                {"chunk_id", chunk.id},
                {"score", chunk.score},
                {"text", engine.chunk(chunk.id)->text},
            });
        }
        const Article* article = engine.article(hit.article_id);
        articles.push_back({
            {"article_id", hit.article_id},
            {"score", hit.score},
            {"title", article ? article->title : ""},
            {"chunks", std::move(chunks)},
        });
    }
    return {
        {"query", query},
        {"strategy", fusion.strategy == FusionStrategy::rrf ? "rrf" : "minmax"},
        {"articles", std::move(articles)},
    };
}

json ask_response(const Engine& engine, const std::string& query) {
    const auto [answer, references] = engine.ask(query);
    json refs = json::array();
    for (const ScoredHit& hit : references) {
        const Chunk* chunk = engine.chunk(hit.id);
        refs.push_back({
            {"chunk_id", hit.id},
            {"article_id", chunk->article_id},
            {"score", hit.score},
            {"text", chunk->text},
        });
    }
    return {
        {"status", answer.status == AnswerStatus::answered ? "answered" : "no_answer"},
        {"answer", answer.answer_text},
        {"references", std::move(refs)},
        {"llm_calls_used", answer.llm_calls_used},
        {"active_retrieval_engaged", answer.active_retrieval_engaged},
        {"parse_failure", answer.parse_failure},
    };
}

Service::Service(ServiceConfig config) : config_(std::move(config)) {
    config_.validate();
    engine_ = make_engine(config_);
    server_ = std::make_unique<httplib::Server>();
    const int timeout_s = std::max(1, config_.request_timeout_ms / 1000);
    server_->set_read_timeout(timeout_s, 0);
    server_->set_write_timeout(timeout_s, 0);
    install_routes();
}

Service::~Service() { stop(); }

std::shared_ptr<const Engine> Service::engine_snapshot() const {
    std::lock_guard lock(engine_mutex_);
    return engine_;
}

void Service::install_routes() {
    using httplib::Request;
    using httplib::Response;

    const auto timed = [](const std::string& path,
                          std::function<void(const Request&, Response&)> fn) {
        return [path, fn = std::move(fn)](const Request& req, Response& res) {
            const auto start = std::chrono::steady_clock::now();
            try {
                fn(req, res);
            } catch (const ConfigError& e) {
                set_error(res, 400, e.what());
            } catch (const ProviderError& e) {
                set_error(res, 503, e.what());
            } catch (const std::exception& e) {
                set_error(res, 500, e.what());
            }
            const auto elapsed = std::chrono::steady_clock::now() - start;
            log_request(req.method, path,
                        res.status,
                        std::chrono::duration<double, std::milli>(elapsed).count());
        };
    };

    server_->Get("/health", timed("/health", [this](const Request&, Response& res) {
        const auto engine = engine_snapshot();
        set_ok(res, {
                        {"status", "ok"},
                        {"corpus_stats",
                         {{"articles", engine->article_count()},
                          {"chunks", engine->chunk_count()}}},
                    });
    }));

    server_->Post("/search", timed("/search", [this](const Request& req, Response& res) {
        json body;
        try {
            body = json::parse(req.body);
        } catch (const json::exception& e) {
            set_error(res, 400, std::string("malformed body: ") + e.what());
            return;
        }
        if (!body.is_object() || !body.contains("query") || !body["query"].is_string()) {
            set_error(res, 400, "body must contain a string field: query");
            return;
        }
        const auto k = body.value("k", std::int64_t{10});
        if (k < 1) {
            set_error(res, 400, "k must be >= 1");
            return;
        }
        const auto strategy = body.value("strategy", std::string{});
        const auto engine = engine_snapshot();
        set_ok(res, search_response(*engine, body["query"].get<std::string>(),
                                    static_cast<std::size_t>(k), strategy));
    }));

    server_->Post("/ask", timed("/ask", [this](const Request& req, Response& res) {
        json body;
        try {
            body = json::parse(req.body);
        } catch (const json::exception& e) {
            set_error(res, 400, std::string("malformed body: ") + e.what());
            return;
        }
        if (!body.is_object() || !body.contains("query") || !body["query"].is_string()) {
            set_error(res, 400, "body must contain a string field: query");
            return;
        }
        const auto engine = engine_snapshot();
        set_ok(res, ask_response(*engine, body["query"].get<std::string>()));
    }));

    server_->Post("/admin/reindex",
                  timed("/admin/reindex", [this](const Request&, Response& res) {
                      auto fresh = make_engine(config_);
                      {
                          std::lock_guard lock(engine_mutex_);
                          engine_.swap(fresh);
                      }
                      const auto engine = engine_snapshot();
                      set_ok(res, {
                                      {"status", "ok"},
                                      {"articles", engine->article_count()},
                                      {"chunks", engine->chunk_count()},
                                  });
                  }));
}

int Service::bind() {
    const auto [host, port] = parse_listen(config_.listen);
    if (port == 0) {
        const int bound = server_->bind_to_any_port(host);
        if (bound < 0) throw Error("cannot bind " + config_.listen);
        port_ = bound;
    } else {
        if (!server_->bind_to_port(host, port))
            throw Error("cannot bind " + config_.listen);
        port_ = port;
    }
    return port_;
}

int Service::run() {
    const auto [host, port] = parse_listen(config_.listen);
    bind();
    log_line({{"event", "listening"}, {"host", host}, {"port", port_}});
    return server_->listen_after_bind() ? 0 : 1;
}

void Service::start_async() {
    const auto [host, port] = parse_listen(config_.listen);
    bind();
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    log_line({{"event", "listening"}, {"host", host}, {"port", port_}});
}

void Service::stop() {
    if (server_ && server_->is_running()) server_->stop();
    if (thread_.joinable()) thread_.join();
}

} // namespace raglex
