#include "raglex/cli.hpp"

#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "raglex/corpus.hpp"
#include "raglex/engine.hpp"
#include "raglex/errors.hpp"
#include "raglex/evalkit.hpp"
#include "raglex/providers.hpp"
#include "raglex/service.hpp"

namespace raglex {
namespace {

using nlohmann::json;

struct IngestArgs {
    std::string articles_file;
    std::string out_dir;
    std::string stopwords_file;
    std::size_t max_chunk_tokens = ChunkingConfig{}.max_chunk_tokens;
    std::size_t overlap_tokens = ChunkingConfig{}.overlap_tokens;
    std::string section_pattern = IngestConfig{}.section_pattern;
    int threads = 0;
};

struct LexicalArgs {
    std::string corpus_dir;
    std::string out_dir;
    double k1 = Bm25Params{}.k1;
    double b = Bm25Params{}.b;
};

struct DenseArgs {
    std::string corpus_dir;
    std::string out_dir;
    std::string provider_type = "hash";
    std::size_t dimension = 64;
    std::string endpoint;
    std::string mode = "exact";
    std::size_t m = HnswParams{}.M;
    std::size_t ef_construction = HnswParams{}.ef_construction;
    std::size_t ef_search = HnswParams{}.ef_search;
    std::uint64_t seed = HnswParams{}.seed;
    int threads = 0;
};

int cmd_ingest(const IngestArgs& args) {
    const StopwordSet stopwords = load_stopwords(args.stopwords_file);
    WhitespaceSegmenter segmenter;
    IngestConfig config;
    config.chunking.max_chunk_tokens = args.max_chunk_tokens;
    config.chunking.overlap_tokens = args.overlap_tokens;
    config.section_pattern = args.section_pattern;
    config.threads = args.threads;

    const std::vector<Article> raw = load_articles_jsonl(args.articles_file);
    const Corpus corpus = ingest_articles(raw, segmenter, stopwords, config);
    save_corpus(corpus, args.out_dir);
    std::cout << json{{"articles", corpus.articles.size()},
                      {"chunks", corpus.chunks.size()},
                      {"out", args.out_dir}}
                     .dump()
              << '\n';
    return 0;
}

int cmd_index_lexical(const LexicalArgs& args) {
    const Corpus corpus = load_corpus(args.corpus_dir);
    const Bm25Index index = Bm25Index::build(corpus.chunks, {args.k1, args.b});
    index.save(args.out_dir);
    std::cout << json{{"documents", index.doc_count()},
                      {"avgdl", index.avgdl()},
                      {"out", args.out_dir}}
                     .dump()
              << '\n';
    return 0;
}

int cmd_index_dense(const DenseArgs& args) {
    json provider_config = {{"type", args.provider_type}, {"dimension", args.dimension}};
    if (args.provider_type == "http") provider_config["endpoint"] = args.endpoint;
    const auto provider = make_embedding_provider(provider_config);

    const Corpus corpus = load_corpus(args.corpus_dir);
    const DenseIndex index = DenseIndex::build(
        corpus.chunks, *provider, dense_mode_from_string(args.mode),
        {args.m, args.ef_construction, args.ef_search, args.seed}, args.threads);
    index.save(args.out_dir);
    std::cout << json{{"vectors", index.size()},
                      {"dimension", index.dimension()},
                      {"mode", to_string(index.mode())},
                      {"out", args.out_dir}}
                     .dump()
              << '\n';
    return 0;
}

int cmd_search(const std::string& config_path, const std::string& query, std::size_t k,
               const std::string& strategy) {
    const ServiceConfig config = ServiceConfig::from_file(config_path);
    const auto engine = make_engine(config);
    std::cout << search_response(*engine, query, k, strategy).dump(2) << '\n';
    return 0;
}

int cmd_ask(const std::string& config_path, const std::string& query) {
    const ServiceConfig config = ServiceConfig::from_file(config_path);
    const auto engine = make_engine(config);
    std::cout << ask_response(*engine, query).dump(2) << '\n';
    return 0;
}

int cmd_eval(const std::string& spec_path, const std::string& out_dir) {
    const ExperimentSpec spec = ExperimentSpec::from_file(spec_path);
    run_experiment(spec, out_dir);
    std::ifstream table(out_dir + "/report.txt");
    std::cout << table.rdbuf();
    return 0;
}

int cmd_serve(const std::string& config_path) {
    Service service(ServiceConfig::from_file(config_path));
    return service.run();
}

} // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"hybrid lexical/semantic retrieval and question answering "
                 "over legal articles"};
    app.require_subcommand(1);

    IngestArgs ingest_args;
    auto* ingest = app.add_subcommand("ingest", "chunk articles into a corpus");
    ingest->add_option("--articles", ingest_args.articles_file, "articles JSONL file")
        ->required();
    ingest->add_option("--out", ingest_args.out_dir, "corpus output directory")
        ->required();
    ingest->add_option("--stopwords", ingest_args.stopwords_file, "stopword list file")
        ->required();
    ingest->add_option("--max-chunk-tokens", ingest_args.max_chunk_tokens,
                       "chunk window size");
    ingest->add_option("--overlap-tokens", ingest_args.overlap_tokens,
                       "window overlap");
    ingest->add_option("--section-pattern", ingest_args.section_pattern,
                       "regex marking section headers");
    ingest->add_option("--threads", ingest_args.threads, "0 = runtime default");

    auto* index = app.add_subcommand("index", "build an index from a corpus");
    index->require_subcommand(1);

    LexicalArgs lexical_args;
    auto* lexical = index->add_subcommand("lexical", "build the inverted index");
    lexical->add_option("--corpus", lexical_args.corpus_dir, "corpus directory")
        ->required();
    lexical->add_option("--out", lexical_args.out_dir, "index output directory")
        ->required();
    lexical->add_option("--k1", lexical_args.k1, "term-frequency saturation");
    lexical->add_option("--b", lexical_args.b, "length normalization");

    DenseArgs dense_args;
    auto* dense = index->add_subcommand("dense", "build the vector store");
    dense->add_option("--corpus", dense_args.corpus_dir, "corpus directory")->required();
    dense->add_option("--out", dense_args.out_dir, "index output directory")->required();
    dense->add_option("--provider", dense_args.provider_type, "hash or http");
    dense->add_option("--dimension", dense_args.dimension, "embedding dimension");
    dense->add_option("--endpoint", dense_args.endpoint, "http provider endpoint");
    dense->add_option("--mode", dense_args.mode, "exact or hnsw");
    dense->add_option("--m", dense_args.m, "graph degree");
    dense->add_option("--ef-construction", dense_args.ef_construction,
                      "build beam width");
    dense->add_option("--ef-search", dense_args.ef_search, "query beam width");
    dense->add_option("--seed", dense_args.seed, "level-generator seed");
    dense->add_option("--threads", dense_args.threads, "0 = runtime default");

    std::string query, config_path, strategy;
    std::size_t k = 10;
    auto* search = app.add_subcommand("search", "rank articles for a query");
    search->add_option("--query", query, "query text")->required();
    search->add_option("--config", config_path, "service config file")->required();
    search->add_option("--k", k, "articles to return");
    search->add_option("--strategy", strategy, "minmax or rrf (default: config)");

    std::string ask_query, ask_config;
    auto* ask = app.add_subcommand("ask", "answer a question with references");
    ask->add_option("--query", ask_query, "question text")->required();
    ask->add_option("--config", ask_config, "service config file")->required();

    std::string spec_path, eval_out;
    auto* eval = app.add_subcommand("eval", "run retrieval experiments");
    eval->add_option("--spec", spec_path, "experiment spec file")->required();
    eval->add_option("--out", eval_out, "report output directory")->required();

    std::string serve_config;
    auto* serve = app.add_subcommand("serve", "run the HTTP service");
    serve->add_option("--config", serve_config, "service config file")->required();

    std::vector<std::string> argv_storage;
    argv_storage.reserve(args.size() + 1);
    argv_storage.push_back("raglex");
    for (const std::string& arg : args) argv_storage.push_back(arg);
    std::vector<const char*> argv;
    for (const std::string& arg : argv_storage) argv.push_back(arg.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }

    try {
        if (*ingest) return cmd_ingest(ingest_args);
        if (*lexical) return cmd_index_lexical(lexical_args);
        if (*dense) return cmd_index_dense(dense_args);
        if (*search) return cmd_search(config_path, query, k, strategy);
        if (*ask) return cmd_ask(ask_config, ask_query);
        if (*eval) return cmd_eval(spec_path, eval_out);
        if (*serve) return cmd_serve(serve_config);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    std::cerr << "error: no subcommand selected\n" << app.help();
    return 2;
}

} // namespace raglex
