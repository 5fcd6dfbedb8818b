#include "raglex/dense.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "raglex/errors.hpp"

namespace raglex {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

void write_f32(std::ostream& out, float value) {
    const auto bits = std::bit_cast<std::uint32_t>(value);
    char bytes[4];
    for (int i = 0; i < 4; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
    out.write(bytes, 4);
}

float read_f32(std::istream& in) {
    unsigned char bytes[4];
    in.read(reinterpret_cast<char*>(bytes), 4);
    if (!in) throw IoError("vectors.bin: truncated");
    std::uint32_t bits = 0;
    for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(bytes[i]) << (8 * i);
    return std::bit_cast<float>(bits);
}

double norm_of(std::span<const float> v) {
    double sum = 0.0;
    for (float x : v) sum += static_cast<double>(x) * x;
    return std::sqrt(sum);
}

} // namespace

std::string to_string(DenseMode mode) {
    return mode == DenseMode::exact ? "exact" : "hnsw";
}

DenseMode dense_mode_from_string(const std::string& name) {
    if (name == "exact") return DenseMode::exact;
    if (name == "hnsw") return DenseMode::hnsw;
    throw ConfigError("unknown dense mode: " + name);
}

double cosine(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size())
        throw Error("cosine: dimension mismatch: " + std::to_string(a.size()) + " vs " +
                    std::to_string(b.size()));
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double x = a[i], y = b[i];
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if (na == 0.0 || nb == 0.0) throw Error("cosine: zero vector");
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

DenseIndex DenseIndex::build(const std::vector<Chunk>& chunks,
                             const EmbeddingProvider& provider, DenseMode mode,
                             HnswParams graph_params, int threads) {
    if (chunks.empty()) throw BuildError("dense index: corpus is empty");

    std::vector<const Chunk*> order(chunks.size());
    for (std::size_t i = 0; i < chunks.size(); ++i) order[i] = &chunks[i];
    std::sort(order.begin(), order.end(),
              [](const Chunk* a, const Chunk* b) { return a->chunk_id < b->chunk_id; });
    for (std::size_t i = 1; i < order.size(); ++i)
        if (order[i]->chunk_id == order[i - 1]->chunk_id)
            throw BuildError("dense index: duplicate chunk id: " + order[i]->chunk_id);

    DenseIndex index;
    index.mode_ = mode;
    index.graph_params_ = graph_params;
    index.dim_ = provider.dimension();
    index.ids_.reserve(order.size());
    for (const Chunk* chunk : order) index.ids_.push_back(chunk->chunk_id);
    index.data_.assign(order.size() * index.dim_, 0.0f);

    const auto n = static_cast<std::int64_t>(order.size());
    std::string first_error;
#ifdef _OPENMP
    const int num_threads = threads > 0 ? threads : omp_get_max_threads();
#else
    (void)threads;
    const int num_threads = 1;
#endif
#pragma omp parallel for num_threads(num_threads) schedule(dynamic, 16)
    for (std::int64_t i = 0; i < n; ++i) {
        try {
            const Chunk& chunk = *order[static_cast<std::size_t>(i)];
            std::vector<float> v = provider.embed(chunk.dense_text);
            if (v.size() != index.dim_)
                throw BuildError("dimension " + std::to_string(v.size()) + ", expected " +
                                 std::to_string(index.dim_));
            const double norm = norm_of(v);
            if (norm == 0.0) throw BuildError("zero embedding");
            float* row = index.data_.data() + static_cast<std::size_t>(i) * index.dim_;
            for (std::size_t d = 0; d < index.dim_; ++d)
                row[d] = static_cast<float>(v[d] / norm);
        } catch (const std::exception& e) {
#pragma omp critical(raglex_dense_build_error)
            if (first_error.empty())
                first_error = "dense index: chunk " +
                              order[static_cast<std::size_t>(i)]->chunk_id + ": " + e.what();
        }
    }
    if (!first_error.empty()) throw BuildError(first_error);

    if (mode == DenseMode::hnsw)
        index.graph_ = HnswGraph::build(index.data_.data(), index.ids_.size(),
                                        index.dim_, graph_params);
    return index;
}

RankedList DenseIndex::exact_search(std::span<const float> query, std::size_t k) const {
    const auto n = static_cast<std::int64_t>(ids_.size());
    std::vector<double> scores(ids_.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        const float* row = data_.data() + static_cast<std::size_t>(i) * dim_;
        scores[static_cast<std::size_t>(i)] = cosine(query, std::span(row, dim_));
    }

    std::vector<std::uint32_t> idx(ids_.size());
    for (std::uint32_t i = 0; i < idx.size(); ++i) idx[i] = i;
    const auto by_rank = [&](std::uint32_t a, std::uint32_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    };
    if (k < idx.size()) {
        std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k),
                          idx.end(), by_rank);
        idx.resize(k);
    } else {
        std::sort(idx.begin(), idx.end(), by_rank);
    }

    RankedList out;
    out.reserve(idx.size());
    for (std::uint32_t i : idx) out.push_back({ids_[i], scores[i]});
    return out;
}

RankedList DenseIndex::search(std::span<const float> query, std::size_t k) const {
    if (k < 1) throw Error("dense search: k must be >= 1");
    if (query.size() != dim_)
        throw Error("dense search: query dimension " + std::to_string(query.size()) +
                    ", expected " + std::to_string(dim_));
    if (norm_of(query) == 0.0) throw Error("dense search: zero query vector");
    k = std::min(k, ids_.size());

    if (mode_ == DenseMode::exact) return exact_search(query, k);

    // Rows are unit, so inner product over a unit query equals cosine.
    const double norm = norm_of(query);
    std::vector<float> unit(query.size());
    for (std::size_t i = 0; i < query.size(); ++i)
        unit[i] = static_cast<float>(query[i] / norm);
    const auto hits = graph_.search(data_.data(), dim_, unit.data(), k,
                                    std::max(graph_params_.ef_search, k));
    RankedList out;
    out.reserve(hits.size());
    for (const auto& [sim, ord] : hits) out.push_back({ids_[ord], sim});
    return out;
}

std::span<const float> DenseIndex::vector_of(const std::string& chunk_id) const {
    const auto it = std::lower_bound(ids_.begin(), ids_.end(), chunk_id);
    if (it == ids_.end() || *it != chunk_id)
        throw Error("dense index: unknown chunk id: " + chunk_id);
    const auto ord = static_cast<std::size_t>(it - ids_.begin());
    return {data_.data() + ord * dim_, dim_};
}

void DenseIndex::save(const std::string& dir) const {
    fs::create_directories(dir);

    std::ofstream vec(fs::path(dir) / "vectors.bin", std::ios::binary);
    if (!vec) throw IoError("cannot write " + dir + "/vectors.bin");
    const json header = {
        {"version", 1},
        {"dimension", dim_},
        {"count", ids_.size()},
        {"mode", to_string(mode_)},
        {"m", graph_params_.M},
        {"ef_construction", graph_params_.ef_construction},
        {"ef_search", graph_params_.ef_search},
        {"seed", graph_params_.seed},
    };
    vec << header.dump() << '\n';
    for (float x : data_) write_f32(vec, x);
    if (!vec) throw IoError("vectors.bin: write failed");

    std::ofstream ids(fs::path(dir) / "ids.txt");
    if (!ids) throw IoError("cannot write " + dir + "/ids.txt");
    for (const std::string& id : ids_) ids << id << '\n';

    if (mode_ == DenseMode::hnsw) {
        std::ofstream g(fs::path(dir) / "graph.bin", std::ios::binary);
        if (!g) throw IoError("cannot write " + dir + "/graph.bin");
        graph_.save(g);
    }
}

DenseIndex DenseIndex::load(const std::string& dir) {
    std::ifstream vec(fs::path(dir) / "vectors.bin", std::ios::binary);
    if (!vec) throw IoError("cannot read " + dir + "/vectors.bin");
    std::string header_line;
    if (!std::getline(vec, header_line)) throw IoError("vectors.bin: missing header");

    DenseIndex index;
    std::size_t count = 0;
    try {
        const json header = json::parse(header_line);
        if (header.value("version", 0) != 1)
            throw IoError("vectors.bin: unsupported version");
        index.dim_ = header.at("dimension").get<std::size_t>();
        count = header.at("count").get<std::size_t>();
        index.mode_ = dense_mode_from_string(header.at("mode").get<std::string>());
        index.graph_params_.M = header.at("m").get<std::size_t>();
        index.graph_params_.ef_construction = header.at("ef_construction").get<std::size_t>();
        index.graph_params_.ef_search = header.at("ef_search").get<std::size_t>();
        index.graph_params_.seed = header.at("seed").get<std::uint64_t>();
    } catch (const json::exception& e) {
        throw IoError(std::string("vectors.bin: malformed header: ") + e.what());
    }

    index.data_.resize(count * index.dim_);
    for (float& x : index.data_) x = read_f32(vec);

    std::ifstream ids(fs::path(dir) / "ids.txt");
    if (!ids) throw IoError("cannot read " + dir + "/ids.txt");
    std::string line;
    while (std::getline(ids, line)) index.ids_.push_back(line);
    if (index.ids_.size() != count)
        throw IoError(dir + "/ids.txt: row count does not match header");

    if (index.mode_ == DenseMode::hnsw) {
        std::ifstream g(fs::path(dir) / "graph.bin", std::ios::binary);
        if (!g) throw IoError("cannot read " + dir + "/graph.bin");
        index.graph_ = HnswGraph::load(g);
        if (index.graph_.size() != count)
            throw IoError(dir + "/graph.bin: node count does not match header");
    }
    return index;
}

} // namespace raglex
