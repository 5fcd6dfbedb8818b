#include "raglex/evalkit.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <unordered_set>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "raglex/engine.hpp"
#include "raglex/errors.hpp"
#include "raglex/providers.hpp"

namespace raglex {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::size_t gold_rank(const EvalRecord& record) {
    const auto it = std::find(record.ranked_articles.begin(),
                              record.ranked_articles.end(), record.gold_article_id);
    if (it == record.ranked_articles.end()) return 0;  // absent
    return static_cast<std::size_t>(it - record.ranked_articles.begin()) + 1;
}

std::vector<std::string> to_article_ids(const RankedList& chunks,
                                        const SearchContext& ctx) {
    RankedList filtered;
    filtered.reserve(chunks.size());
    for (const ScoredHit& hit : chunks)
        if (ctx.sentinel == nullptr || hit.id != ctx.sentinel->chunk_id)
            filtered.push_back(hit);
    const RankedList articles = chunks_to_articles(filtered, *ctx.chunk_to_article);
    std::vector<std::string> ids;
    ids.reserve(articles.size());
    for (const ScoredHit& hit : articles) ids.push_back(hit.id);
    return ids;
}

struct PipelineRanking {
    std::vector<std::string> articles;
    AnswerResult answer;
};

PipelineRanking pipeline_ranking(const SearchContext& ctx, LlmClient& client,
                                 const std::string& raw_query,
                                 const PipelineConfig& config, std::size_t depth) {
    auto [answer, references] = answer_pipeline(ctx, client, raw_query, config);

    // Reference articles lead; the hybrid ranking fills in the rest.
    const std::vector<std::string> hybrid =
        rank_articles_hybrid(ctx, normalize_text(raw_query), depth);
    std::vector<std::string> articles;
    std::unordered_set<std::string> seen;
    if (answer.status == AnswerStatus::answered) {
        for (const ScoredHit& hit : references) {
            const auto it = ctx.chunk_to_article->find(hit.id);
            if (it == ctx.chunk_to_article->end()) continue;
            if (seen.insert(it->second).second) articles.push_back(it->second);
        }
    }
    for (const std::string& id : hybrid)
        if (seen.insert(id).second) articles.push_back(id);
    return {std::move(articles), std::move(answer)};
}

// Scripted answering for evaluation: cites the gold article whenever the
// prompt shows it, refuses otherwise, and leaves rewrites unchanged.
CallbackLlm make_gold_echo(const std::string& gold_article_id, std::string answer_text) {
    return CallbackLlm([gold_article_id, answer_text = std::move(answer_text)](
                           const std::string& prompt) -> std::string {
        if (prompt.find("cited_article_ids") == std::string::npos) {
            const auto marker = prompt.rfind("Question: ");
            return marker == std::string::npos ? prompt : prompt.substr(marker + 10);
        }
        if (prompt.find("\n[" + gold_article_id + "] ") != std::string::npos) {
            const json response = {{"answerable", true},
                                   {"answer", answer_text},
                                   {"cited_article_ids", {gold_article_id}}};
            return response.dump();
        }
        return R"({"answerable": false, "answer": "", "cited_article_ids": []})";
    });
}

std::string metric_name(const char* kind, std::size_t k) {
    return std::string(kind) + "@" + std::to_string(k);
}

void write_report_txt(const fs::path& path, const MetricsReport& report,
                      const std::vector<std::string>& metric_names) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    std::size_t name_width = 8;
    for (const auto& [system, _] : report.systems)
        name_width = std::max(name_width, system.size());

    out << std::left;
    out.width(static_cast<std::streamsize>(name_width + 2));
    out << "system";
    for (const std::string& name : metric_names) {
        out.width(12);
        out << name;
    }
    out << '\n';
    out << std::fixed;
    out.precision(4);
    for (const auto& [system, values] : report.systems) {
        out.width(static_cast<std::streamsize>(name_width + 2));
        out << system;
        for (const std::string& name : metric_names) {
            out.width(12);
            const auto it = values.find(name);
            if (it == values.end())
                out << "-";
            else
                out << it->second;
        }
        out << '\n';
    }
    out << "\nquestions: " << report.questions_evaluated << " evaluated, "
        << report.questions_excluded << " excluded of " << report.questions_total
        << '\n';
}

} // namespace

double recall_at_k(const std::vector<EvalRecord>& records, std::size_t k) {
    if (records.empty()) throw Error("recall@k: empty record set");
    if (k < 1) throw Error("recall@k: k must be >= 1");
    std::size_t hits = 0;
    for (const EvalRecord& record : records) {
        const std::size_t rank = gold_rank(record);
        if (rank >= 1 && rank <= k) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(records.size());
}

double map_at_k(const std::vector<EvalRecord>& records, std::size_t k) {
    if (records.empty()) throw Error("map@k: empty record set");
    if (k < 1) throw Error("map@k: k must be >= 1");
    double total = 0.0;
    for (const EvalRecord& record : records) {
        const std::size_t rank = gold_rank(record);
        if (rank >= 1 && rank <= k) total += 1.0 / static_cast<double>(rank);
    }
    return total / static_cast<double>(records.size());
}

ExperimentSpec ExperimentSpec::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("spec not found: " + path);
    json parsed;
    try {
        in >> parsed;
    } catch (const json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }

    ExperimentSpec spec;
    try {
        spec.corpus_dir = parsed.at("corpus_dir").get<std::string>();
        spec.lexical_index_dir = parsed.at("lexical_index_dir").get<std::string>();
        spec.dense_index_dir = parsed.at("dense_index_dir").get<std::string>();
        spec.questions_file = parsed.at("questions_file").get<std::string>();
        spec.stopwords_file = parsed.at("stopwords_file").get<std::string>();
        if (parsed.contains("variants"))
            spec.variants = parsed.at("variants").get<std::vector<std::string>>();
        if (parsed.contains("recall_ks"))
            spec.recall_ks = parsed.at("recall_ks").get<std::vector<std::size_t>>();
        if (parsed.contains("map_ks"))
            spec.map_ks = parsed.at("map_ks").get<std::vector<std::size_t>>();
        if (parsed.contains("provider")) spec.provider = parsed.at("provider");
        if (parsed.contains("llm")) spec.llm = parsed.at("llm");
        if (parsed.contains("fusion"))
            spec.fusion = fusion_config_from_json(parsed.at("fusion"));
        if (parsed.contains("pipeline"))
            spec.pipeline = pipeline_config_from_json(parsed.at("pipeline"));
        spec.seed = parsed.value("seed", spec.seed);
        spec.threads = parsed.value("threads", spec.threads);
    } catch (const json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    spec.validate();
    return spec;
}

void ExperimentSpec::validate() const {
    if (corpus_dir.empty()) throw ConfigError("experiment.corpus_dir must be set");
    if (lexical_index_dir.empty())
        throw ConfigError("experiment.lexical_index_dir must be set");
    if (dense_index_dir.empty())
        throw ConfigError("experiment.dense_index_dir must be set");
    if (questions_file.empty())
        throw ConfigError("experiment.questions_file must be set");
    if (stopwords_file.empty())
        throw ConfigError("experiment.stopwords_file must be set");
    if (variants.empty()) throw ConfigError("experiment.variants must not be empty");
    for (const std::string& variant : variants)
        if (variant != "lexical" && variant != "dense" && variant != "hybrid" &&
            variant != "pipeline")
            throw ConfigError("experiment.variants: unknown variant: " + variant);
    if (recall_ks.empty()) throw ConfigError("experiment.recall_ks must not be empty");
    if (map_ks.empty()) throw ConfigError("experiment.map_ks must not be empty");
    for (std::size_t k : recall_ks)
        if (k < 1) throw ConfigError("experiment.recall_ks entries must be >= 1");
    for (std::size_t k : map_ks)
        if (k < 1) throw ConfigError("experiment.map_ks entries must be >= 1");
    fusion.validate();
    pipeline.validate();
}

std::vector<std::string> rank_articles_lexical(const SearchContext& ctx,
                                               const std::string& query,
                                               std::size_t depth) {
    const std::vector<std::string> tokens = analyze(query, *ctx.segmenter, *ctx.stopwords);
    return to_article_ids(ctx.lexical->search(tokens, depth), ctx);
}

std::vector<std::string> rank_articles_dense(const SearchContext& ctx,
                                             const std::string& query,
                                             std::size_t depth) {
    const std::vector<float> vec = embed_query(*ctx.provider, query);
    return to_article_ids(ctx.dense->search(vec, depth), ctx);
}

std::vector<std::string> rank_articles_hybrid(const SearchContext& ctx,
                                              const std::string& query,
                                              std::size_t depth) {
    return to_article_ids(hybrid_chunk_search(ctx, query, depth), ctx);
}

std::vector<std::string> rank_articles_pipeline(const SearchContext& ctx,
                                                LlmClient& client,
                                                const std::string& raw_query,
                                                const PipelineConfig& config,
                                                std::size_t depth) {
    return pipeline_ranking(ctx, client, raw_query, config, depth).articles;
}

MetricsReport run_experiment(const ExperimentSpec& spec, const std::string& out_dir) {
    spec.validate();
    fs::create_directories(out_dir);

    const Corpus corpus = load_corpus(spec.corpus_dir);
    const StopwordSet stopwords = load_stopwords(spec.stopwords_file);
    auto provider = make_embedding_provider(spec.provider);
    Bm25Index lexical = Bm25Index::load(spec.lexical_index_dir);
    DenseIndex dense = DenseIndex::load(spec.dense_index_dir);
    if (provider->dimension() != dense.dimension())
        throw ConfigError("experiment.provider: dimension " +
                          std::to_string(provider->dimension()) +
                          " does not match the dense index (" +
                          std::to_string(dense.dimension()) + ")");

    const Engine engine(corpus, std::move(lexical), std::move(dense), provider, nullptr,
                        stopwords, spec.fusion, spec.pipeline);
    const SearchContext ctx = engine.context();

    WhitespaceSegmenter segmenter;
    const std::vector<Question> questions = load_questions_jsonl(
        spec.questions_file, segmenter, spec.pipeline.max_query_tokens);

    MetricsReport report;
    report.questions_total = questions.size();
    std::vector<const Question*> evaluated;
    for (const Question& question : questions) {
        if (engine.article(question.gold_article_id) == nullptr) {
            report.questions_excluded += 1;
            report.excluded_question_ids.push_back(question.id);
        } else {
            evaluated.push_back(&question);
        }
    }
    report.questions_evaluated = evaluated.size();

    std::size_t depth = ctx.fusion.top_k_per_side;
    for (std::size_t k : spec.recall_ks) depth = std::max(depth, k);
    for (std::size_t k : spec.map_ks) depth = std::max(depth, k);

    const bool use_gold_echo = spec.llm.value("type", "") == "gold_echo";
    std::shared_ptr<LlmClient> shared_llm;
    const bool wants_pipeline =
        std::find(spec.variants.begin(), spec.variants.end(), "pipeline") !=
        spec.variants.end();
    if (wants_pipeline && !use_gold_echo) shared_llm = make_llm_client(spec.llm);
    if (wants_pipeline && !use_gold_echo && shared_llm == nullptr)
        throw ConfigError("experiment.llm: pipeline variant needs a completion client");

    // Scripted responses arrive in call order, so parallel questions would
    // interleave them nondeterministically.
    int threads = spec.threads;
    if (spec.llm.value("type", "") == "scripted") threads = 1;
#ifdef _OPENMP
    const int num_threads = threads > 0 ? threads : omp_get_max_threads();
#else
    const int num_threads = 1;
#endif

    // rankings[variant][question]
    std::vector<std::vector<std::vector<std::string>>> rankings(
        spec.variants.size(),
        std::vector<std::vector<std::string>>(evaluated.size()));
    std::vector<AnswerResult> answers(evaluated.size());
    std::string first_error;

    const auto n = static_cast<std::int64_t>(evaluated.size());
#pragma omp parallel for num_threads(num_threads) schedule(dynamic)
    for (std::int64_t qi = 0; qi < n; ++qi) {
        try {
            const Question& question = *evaluated[static_cast<std::size_t>(qi)];
            for (std::size_t vi = 0; vi < spec.variants.size(); ++vi) {
                const std::string& variant = spec.variants[vi];
                std::vector<std::string> ranked;
                if (variant == "lexical") {
                    ranked = rank_articles_lexical(ctx, question.processed_text, depth);
                } else if (variant == "dense") {
                    ranked = rank_articles_dense(ctx, question.processed_text, depth);
                } else if (variant == "hybrid") {
                    ranked = rank_articles_hybrid(ctx, question.processed_text, depth);
                } else {
                    PipelineRanking result;
                    if (use_gold_echo) {
                        const auto& gold_chunks =
                            ctx.chunks_by_article->at(question.gold_article_id);
                        CallbackLlm client = make_gold_echo(question.gold_article_id,
                                                            gold_chunks.front()->text);
                        result = pipeline_ranking(ctx, client, question.raw_text,
                                                  spec.pipeline, depth);
                    } else {
                        result = pipeline_ranking(ctx, *shared_llm, question.raw_text,
                                                  spec.pipeline, depth);
                    }
                    answers[static_cast<std::size_t>(qi)] = result.answer;
                    ranked = std::move(result.articles);
                }
                rankings[vi][static_cast<std::size_t>(qi)] = std::move(ranked);
            }
        } catch (const std::exception& e) {
#pragma omp critical(raglex_eval_error)
            if (first_error.empty())
                first_error = std::string("question ") +
                              evaluated[static_cast<std::size_t>(qi)]->id + ": " +
                              e.what();
        }
    }
    if (!first_error.empty()) throw Error("experiment failed: " + first_error);

    std::vector<std::string> metric_names;
    for (std::size_t k : spec.recall_ks) metric_names.push_back(metric_name("recall", k));
    for (std::size_t k : spec.map_ks) metric_names.push_back(metric_name("map", k));

    for (std::size_t vi = 0; vi < spec.variants.size(); ++vi) {
        if (evaluated.empty()) break;
        std::vector<EvalRecord> records;
        records.reserve(evaluated.size());
        for (std::size_t qi = 0; qi < evaluated.size(); ++qi)
            records.push_back(
                {evaluated[qi]->id, evaluated[qi]->gold_article_id, rankings[vi][qi]});

        auto& values = report.systems[spec.variants[vi]];
        for (std::size_t k : spec.recall_ks)
            values[metric_name("recall", k)] = recall_at_k(records, k);
        for (std::size_t k : spec.map_ks)
            values[metric_name("map", k)] = map_at_k(records, k);

        std::vector<std::size_t> sorted_ks = spec.recall_ks;
        std::sort(sorted_ks.begin(), sorted_ks.end());
        for (std::size_t i = 1; i < sorted_ks.size(); ++i)
            if (values[metric_name("recall", sorted_ks[i])] + 1e-12 <
                values[metric_name("recall", sorted_ks[i - 1])])
                throw Error("experiment: recall decreased with k for variant " +
                            spec.variants[vi]);
    }

    json report_json = {
        {"questions_total", report.questions_total},
        {"questions_evaluated", report.questions_evaluated},
        {"questions_excluded", report.questions_excluded},
        {"excluded_question_ids", report.excluded_question_ids},
        {"systems", json::object()},
        {"spec",
         {{"variants", spec.variants},
          {"recall_ks", spec.recall_ks},
          {"map_ks", spec.map_ks},
          {"fusion", to_json(spec.fusion)},
          {"pipeline", to_json(spec.pipeline)},
          {"seed", spec.seed}}},
    };
    for (const auto& [system, values] : report.systems)
        for (const auto& [name, value] : values)
            report_json["systems"][system][name] = value;
    std::ofstream rj(fs::path(out_dir) / "report.json");
    if (!rj) throw IoError("cannot write " + out_dir + "/report.json");
    rj << report_json.dump(2) << '\n';

    write_report_txt(fs::path(out_dir) / "report.txt", report, metric_names);

    std::ofstream traces(fs::path(out_dir) / "traces.jsonl");
    if (!traces) throw IoError("cannot write " + out_dir + "/traces.jsonl");
    const bool has_pipeline = wants_pipeline;
    for (std::size_t qi = 0; qi < evaluated.size(); ++qi) {
        json trace = {
            {"question_id", evaluated[qi]->id},
            {"gold_article_id", evaluated[qi]->gold_article_id},
            {"rankings", json::object()},
        };
        for (std::size_t vi = 0; vi < spec.variants.size(); ++vi)
            trace["rankings"][spec.variants[vi]] = rankings[vi][qi];
        if (has_pipeline) {
            const AnswerResult& answer = answers[qi];
            trace["pipeline"] = {
                {"status",
                 answer.status == AnswerStatus::answered ? "answered" : "no_answer"},
                {"llm_calls_used", answer.llm_calls_used},
                {"active_retrieval_engaged", answer.active_retrieval_engaged},
                {"parse_failure", answer.parse_failure},
            };
        }
        traces << trace.dump() << '\n';
    }

    return report;
}

} // namespace raglex
