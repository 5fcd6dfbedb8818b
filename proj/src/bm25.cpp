#include "raglex/bm25.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "raglex/errors.hpp"

namespace raglex {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

void write_varint(std::ostream& out, std::uint64_t value) {
    while (value >= 0x80) {
        out.put(static_cast<char>((value & 0x7f) | 0x80));
        value >>= 7;
    }
    out.put(static_cast<char>(value));
}

std::uint64_t read_varint(std::istream& in) {
    std::uint64_t value = 0;
    int shift = 0;
    while (true) {
        int byte = in.get();
        if (byte == EOF) throw IoError("postings.bin: truncated varint");
        value |= static_cast<std::uint64_t>(byte & 0x7f) << shift;
        if ((byte & 0x80) == 0) return value;
        shift += 7;
        if (shift > 63) throw IoError("postings.bin: varint overflow");
    }
}

double idf_value(std::size_t doc_count, std::size_t doc_freq) {
    const double N = static_cast<double>(doc_count);
    const double n = static_cast<double>(doc_freq);
    return std::log((N - n + 0.5) / (n + 0.5) + 1.0);
}

} // namespace

Bm25Index Bm25Index::build(const std::vector<Chunk>& chunks, Bm25Params params) {
    if (chunks.empty()) throw BuildError("lexical index: corpus is empty");

    Bm25Index index;
    index.params_ = params;

    std::vector<const Chunk*> order(chunks.size());
    for (std::size_t i = 0; i < chunks.size(); ++i) order[i] = &chunks[i];
    std::sort(order.begin(), order.end(),
              [](const Chunk* a, const Chunk* b) { return a->chunk_id < b->chunk_id; });

    index.ids_.reserve(order.size());
    index.lengths_.reserve(order.size());
    std::uint64_t total_len = 0;
    for (std::size_t ord = 0; ord < order.size(); ++ord) {
        const Chunk& chunk = *order[ord];
        if (!index.ordinal_of_.emplace(chunk.chunk_id, static_cast<std::uint32_t>(ord)).second)
            throw BuildError("lexical index: duplicate chunk id: " + chunk.chunk_id);
        index.ids_.push_back(chunk.chunk_id);
        index.lengths_.push_back(static_cast<std::uint32_t>(chunk.lexical_tokens.size()));
        total_len += chunk.lexical_tokens.size();

        std::unordered_map<std::string_view, std::uint32_t> tf;
        for (const std::string& token : chunk.lexical_tokens) ++tf[token];
        for (const auto& [term, count] : tf)
            index.postings_[std::string(term)].push_back(
                {static_cast<std::uint32_t>(ord), count});
    }
    // Ordinals were appended in ascending id order, so postings stay sorted.
    index.avgdl_ = static_cast<double>(total_len) / static_cast<double>(order.size());
    return index;
}

double Bm25Index::idf(std::string_view term) const {
    return idf_value(ids_.size(), doc_frequency(term));
}

std::size_t Bm25Index::doc_frequency(std::string_view term) const {
    auto it = postings_.find(std::string(term));
    return it == postings_.end() ? 0 : it->second.size();
}

double Bm25Index::doc_score(const std::vector<Posting>& postings, double idf_val,
                            std::uint32_t ordinal) const {
    auto it = std::lower_bound(postings.begin(), postings.end(), ordinal,
                               [](const Posting& p, std::uint32_t ord) { return p.doc < ord; });
    if (it == postings.end() || it->doc != ordinal) return 0.0;
    const double tf = static_cast<double>(it->tf);
    const double dl = static_cast<double>(lengths_[ordinal]);
    const double denom = tf + params_.k1 * (1.0 - params_.b + params_.b * dl / avgdl_);
    return idf_val * tf * (params_.k1 + 1.0) / denom;
}

double Bm25Index::score(const std::vector<std::string>& query_tokens,
                        const std::string& chunk_id) const {
    auto it = ordinal_of_.find(chunk_id);
    if (it == ordinal_of_.end())
        throw Error("lexical index: unknown chunk id: " + chunk_id);
    double total = 0.0;
    for (const std::string& token : query_tokens) {
        auto post = postings_.find(token);
        if (post == postings_.end()) continue;
        total += doc_score(post->second, idf_value(ids_.size(), post->second.size()), it->second);
    }
    return total;
}

RankedList Bm25Index::search(const std::vector<std::string>& query_tokens,
                             std::size_t k) const {
    if (k < 1) throw Error("lexical search: k must be >= 1");
    std::unordered_map<std::uint32_t, double> acc;
    for (const std::string& token : query_tokens) {
        auto post = postings_.find(token);
        if (post == postings_.end()) continue;
        const double idf_val = idf_value(ids_.size(), post->second.size());
        for (const Posting& p : post->second) {
            const double tf = static_cast<double>(p.tf);
            const double dl = static_cast<double>(lengths_[p.doc]);
            const double denom =
                tf + params_.k1 * (1.0 - params_.b + params_.b * dl / avgdl_);
            acc[p.doc] += idf_val * tf * (params_.k1 + 1.0) / denom;
        }
    }

    std::vector<std::pair<double, std::uint32_t>> hits;
    hits.reserve(acc.size());
    for (const auto& [ord, score] : acc) hits.emplace_back(score, ord);
    std::sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    if (hits.size() > k) hits.resize(k);

    RankedList out;
    out.reserve(hits.size());
    for (const auto& [score, ord] : hits) out.push_back({ids_[ord], score});
    return out;
}

void Bm25Index::save(const std::string& dir) const {
    fs::create_directories(dir);

    json manifest = {
        {"version", 1},
        {"doc_count", ids_.size()},
        {"avgdl", avgdl_},
        {"k1", params_.k1},
        {"b", params_.b},
        {"term_count", postings_.size()},
    };
    std::ofstream mf(fs::path(dir) / "manifest.json");
    if (!mf) throw IoError("cannot write " + dir + "/manifest.json");
    mf << manifest.dump(2) << '\n';

    std::ofstream docs(fs::path(dir) / "docs.tsv");
    if (!docs) throw IoError("cannot write " + dir + "/docs.tsv");
    for (std::size_t i = 0; i < ids_.size(); ++i)
        docs << ids_[i] << '\t' << lengths_[i] << '\n';

    std::vector<const std::string*> terms;
    terms.reserve(postings_.size());
    for (const auto& [term, _] : postings_) terms.push_back(&term);
    std::sort(terms.begin(), terms.end(),
              [](const std::string* a, const std::string* b) { return *a < *b; });

    std::ofstream post(fs::path(dir) / "postings.bin", std::ios::binary);
    if (!post) throw IoError("cannot write " + dir + "/postings.bin");
    for (const std::string* term : terms) {
        const auto& list = postings_.at(*term);
        write_varint(post, term->size());
        post.write(term->data(), static_cast<std::streamsize>(term->size()));
        write_varint(post, list.size());
        std::uint32_t prev = 0;
        for (std::size_t i = 0; i < list.size(); ++i) {
            const std::uint32_t delta = i == 0 ? list[i].doc : list[i].doc - prev;
            write_varint(post, delta);
            write_varint(post, list[i].tf);
            prev = list[i].doc;
        }
    }
}

Bm25Index Bm25Index::load(const std::string& dir) {
    std::ifstream mf(fs::path(dir) / "manifest.json");
    if (!mf) throw IoError("cannot read " + dir + "/manifest.json");
    json manifest;
    try {
        mf >> manifest;
    } catch (const json::exception& e) {
        throw IoError(dir + "/manifest.json: " + e.what());
    }
    if (manifest.value("version", 0) != 1)
        throw IoError(dir + "/manifest.json: unsupported version");

    Bm25Index index;
    index.params_.k1 = manifest.at("k1").get<double>();
    index.params_.b = manifest.at("b").get<double>();
    index.avgdl_ = manifest.at("avgdl").get<double>();
    const auto doc_count = manifest.at("doc_count").get<std::size_t>();
    const auto term_count = manifest.at("term_count").get<std::size_t>();

    std::ifstream docs(fs::path(dir) / "docs.tsv");
    if (!docs) throw IoError("cannot read " + dir + "/docs.tsv");
    std::string line;
    std::uint32_t ord = 0;
    while (std::getline(docs, line)) {
        const auto tab = line.find('\t');
        if (tab == std::string::npos) throw IoError(dir + "/docs.tsv: malformed line");
        index.ids_.push_back(line.substr(0, tab));
        index.lengths_.push_back(static_cast<std::uint32_t>(std::stoul(line.substr(tab + 1))));
        index.ordinal_of_.emplace(index.ids_.back(), ord++);
    }
    if (index.ids_.size() != doc_count)
        throw IoError(dir + "/docs.tsv: row count does not match manifest");

    std::ifstream post(fs::path(dir) / "postings.bin", std::ios::binary);
    if (!post) throw IoError("cannot read " + dir + "/postings.bin");
    for (std::size_t t = 0; t < term_count; ++t) {
        const auto term_len = read_varint(post);
        std::string term(term_len, '\0');
        post.read(term.data(), static_cast<std::streamsize>(term_len));
        if (!post) throw IoError("postings.bin: truncated term");
        const auto df = read_varint(post);
        std::vector<Posting> list;
        list.reserve(df);
        std::uint32_t doc = 0;
        for (std::size_t i = 0; i < df; ++i) {
            doc += static_cast<std::uint32_t>(read_varint(post));
            const auto tf = static_cast<std::uint32_t>(read_varint(post));
            if (doc >= doc_count) throw IoError("postings.bin: doc ordinal out of range");
            list.push_back({doc, tf});
        }
        index.postings_.emplace(std::move(term), std::move(list));
    }
    return index;
}

} // namespace raglex
