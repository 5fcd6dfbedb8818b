#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "raglex/fusion.hpp"
#include "raglex/llm.hpp"
#include "raglex/pipeline.hpp"

namespace raglex {

/// One question's outcome under one system: where the gold article landed.
struct EvalRecord {
    std::string question_id;
    std::string gold_article_id;
    std::vector<std::string> ranked_articles;
};

/// Fraction of records whose gold article appears in the top k.
/// Throws on an empty record set or k < 1.
double recall_at_k(const std::vector<EvalRecord>& records, std::size_t k);

/// Mean of 1/rank when the gold ranks within k, else 0. With a single gold
/// per question this is average precision, and map@1 equals recall@1.
double map_at_k(const std::vector<EvalRecord>& records, std::size_t k);

struct ExperimentSpec {
    std::string corpus_dir;
    std::string lexical_index_dir;
    std::string dense_index_dir;
    std::string questions_file;
    std::string stopwords_file;
    std::vector<std::string> variants = {"lexical", "dense", "hybrid", "pipeline"};
    std::vector<std::size_t> recall_ks = {1, 10, 100};
    std::vector<std::size_t> map_ks = {1, 10};
    nlohmann::json provider = {{"type", "hash"}, {"dimension", 64}};
    nlohmann::json llm = {{"type", "gold_echo"}};
    FusionConfig fusion;
    PipelineConfig pipeline;
    std::uint64_t seed = 42;
    int threads = 0;  // 0 = runtime default; scripted clients force 1

    static ExperimentSpec from_file(const std::string& path);
    void validate() const;
};

struct MetricsReport {
    // system name -> metric name ("recall@10", "map@1", ...) -> value
    std::map<std::string, std::map<std::string, double>> systems;
    std::size_t questions_total = 0;
    std::size_t questions_evaluated = 0;
    std::size_t questions_excluded = 0;  // gold article absent from the corpus
    std::vector<std::string> excluded_question_ids;
};

/// Runs every variant over every question and writes report.json, report.txt,
/// and traces.jsonl under out_dir. Questions whose gold article is missing
/// from the corpus are excluded and reported.
MetricsReport run_experiment(const ExperimentSpec& spec, const std::string& out_dir);

/// Article rankings for the individual retrieval routes; the sentinel chunk
/// is dropped before aggregation. depth = how many chunks to pull per route.
std::vector<std::string> rank_articles_lexical(const SearchContext& ctx,
                                               const std::string& query,
                                               std::size_t depth);
std::vector<std::string> rank_articles_dense(const SearchContext& ctx,
                                             const std::string& query,
                                             std::size_t depth);
std::vector<std::string> rank_articles_hybrid(const SearchContext& ctx,
                                              const std::string& query,
                                              std::size_t depth);

/// Full pipeline ranking: articles of the re-ranked references first, then
/// the remaining hybrid articles in retrieval order. A no-answer outcome
/// leaves the hybrid ranking unchanged.
std::vector<std::string> rank_articles_pipeline(const SearchContext& ctx,
                                                LlmClient& client,
                                                const std::string& raw_query,
                                                const PipelineConfig& config,
                                                std::size_t depth);

} // namespace raglex
