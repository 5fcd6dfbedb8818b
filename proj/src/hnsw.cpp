#include "raglex/hnsw.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <queue>
#include <random>

#include "raglex/errors.hpp"

namespace raglex {
namespace {

using Links = std::vector<std::vector<std::vector<std::uint32_t>>>;

struct Cand {
    double sim;
    std::uint32_t id;
};

// Max-heap: best similarity first, smaller ordinal wins ties.
struct ByBest {
    bool operator()(const Cand& a, const Cand& b) const {
        if (a.sim != b.sim) return a.sim < b.sim;
        return a.id > b.id;
    }
};

// Min-heap: worst similarity first, larger ordinal is worse on ties.
struct ByWorst {
    bool operator()(const Cand& a, const Cand& b) const {
        if (a.sim != b.sim) return a.sim > b.sim;
        return a.id < b.id;
    }
};

double dot(const float* a, const float* b, std::size_t dim) {
    double sum = 0.0;
    for (std::size_t i = 0; i < dim; ++i)
        sum += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    return sum;
}

double node_sim(const float* data, std::size_t dim, const float* query,
                std::uint32_t node) {
    return dot(query, data + static_cast<std::size_t>(node) * dim, dim);
}

std::uint32_t greedy_step(const Links& links, const float* data, std::size_t dim,
                          const float* query, std::uint32_t ep, int level) {
    double cur_sim = node_sim(data, dim, query, ep);
    bool improved = true;
    while (improved) {
        improved = false;
        for (std::uint32_t next : links[ep][static_cast<std::size_t>(level)]) {
            const double s = node_sim(data, dim, query, next);
            if (s > cur_sim) {
                cur_sim = s;
                ep = next;
                improved = true;
            }
        }
    }
    return ep;
}

// Beam search within one level; returns up to ef nodes, best first.
std::vector<Cand> search_layer(const Links& links, const float* data, std::size_t dim,
                               const float* query, std::uint32_t ep, std::size_t ef,
                               int level) {
    std::vector<char> visited(links.size(), 0);
    std::priority_queue<Cand, std::vector<Cand>, ByBest> frontier;
    std::priority_queue<Cand, std::vector<Cand>, ByWorst> best;

    const double ep_sim = node_sim(data, dim, query, ep);
    visited[ep] = 1;
    frontier.push({ep_sim, ep});
    best.push({ep_sim, ep});

    while (!frontier.empty()) {
        const Cand cur = frontier.top();
        frontier.pop();
        if (best.size() >= ef && cur.sim < best.top().sim) break;
        for (std::uint32_t next : links[cur.id][static_cast<std::size_t>(level)]) {
            if (visited[next]) continue;
            visited[next] = 1;
            const double s = node_sim(data, dim, query, next);
            if (best.size() < ef || s > best.top().sim) {
                frontier.push({s, next});
                best.push({s, next});
                if (best.size() > ef) best.pop();
            }
        }
    }

    std::vector<Cand> out;
    out.reserve(best.size());
    while (!best.empty()) {
        out.push_back(best.top());
        best.pop();
    }
    std::reverse(out.begin(), out.end());
    return out;
}

void write_u32(std::ostream& out, std::uint32_t v) {
    char bytes[4];
    for (int i = 0; i < 4; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(bytes, 4);
}

void write_u64(std::ostream& out, std::uint64_t v) {
    char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(bytes, 8);
}

std::uint32_t read_u32(std::istream& in) {
    unsigned char bytes[4];
    in.read(reinterpret_cast<char*>(bytes), 4);
    if (!in) throw IoError("graph.bin: truncated");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[i]) << (8 * i);
    return v;
}

std::uint64_t read_u64(std::istream& in) {
    unsigned char bytes[8];
    in.read(reinterpret_cast<char*>(bytes), 8);
    if (!in) throw IoError("graph.bin: truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    return v;
}

class Builder {
public:
    Builder(const float* data, std::size_t dim, const HnswParams& params, Links& links,
            std::uint32_t& entry, int& max_level)
        : data_(data),
          dim_(dim),
          params_(params),
          links_(links),
          entry_(entry),
          max_level_(max_level),
          rng_(params.seed),
          level_scale_(1.0 / std::log(static_cast<double>(params.M))) {}

    void insert(std::uint32_t node) {
        const int level = sample_level();
        links_[node].assign(static_cast<std::size_t>(level) + 1, {});
        if (max_level_ < 0) {
            entry_ = node;
            max_level_ = level;
            return;
        }

        const float* vec = data_ + static_cast<std::size_t>(node) * dim_;
        std::uint32_t ep = entry_;
        for (int lc = max_level_; lc > level; --lc)
            ep = greedy_step(links_, data_, dim_, vec, ep, lc);

        for (int lc = std::min(level, max_level_); lc >= 0; --lc) {
            std::vector<Cand> found =
                search_layer(links_, data_, dim_, vec, ep, params_.ef_construction, lc);
            const std::size_t m = std::min(params_.M, found.size());
            auto& own = links_[node][static_cast<std::size_t>(lc)];
            own.reserve(m);
            for (std::size_t i = 0; i < m; ++i) own.push_back(found[i].id);
            for (std::size_t i = 0; i < m; ++i) connect(found[i].id, node, lc);
            if (!found.empty()) ep = found.front().id;
        }

        if (level > max_level_) {
            entry_ = node;
            max_level_ = level;
        }
    }

private:
    int sample_level() {
        std::uniform_real_distribution<double> uniform(0.0, 1.0);
        double u = uniform(rng_);
        if (u <= 0.0) u = std::numeric_limits<double>::min();
        return static_cast<int>(-std::log(u) * level_scale_);
    }

    // Adds a back-edge and prunes the list to the level cap, keeping the
    // neighbors most similar to the owning node.
    void connect(std::uint32_t node, std::uint32_t added, int level) {
        auto& list = links_[node][static_cast<std::size_t>(level)];
        list.push_back(added);
        const std::size_t cap = level == 0 ? params_.M * 2 : params_.M;
        if (list.size() <= cap) return;
        const float* vec = data_ + static_cast<std::size_t>(node) * dim_;
        std::vector<Cand> scored;
        scored.reserve(list.size());
        for (std::uint32_t other : list)
            scored.push_back({node_sim(data_, dim_, vec, other), other});
        std::sort(scored.begin(), scored.end(), [](const Cand& a, const Cand& b) {
            if (a.sim != b.sim) return a.sim > b.sim;
            return a.id < b.id;
        });
        list.clear();
        for (std::size_t i = 0; i < cap; ++i) list.push_back(scored[i].id);
    }

    const float* data_;
    std::size_t dim_;
    const HnswParams& params_;
    Links& links_;
    std::uint32_t& entry_;
    int& max_level_;
    std::mt19937_64 rng_;
    double level_scale_;
};

} // namespace

HnswGraph HnswGraph::build(const float* data, std::size_t count, std::size_t dim,
                           const HnswParams& params) {
    if (params.M < 2) throw ConfigError("graph M must be >= 2");
    if (params.ef_construction < params.M)
        throw ConfigError("graph ef_construction must be >= M");
    HnswGraph graph;
    graph.params_ = params;
    graph.links_.resize(count);
    Builder builder(data, dim, params, graph.links_, graph.entry_, graph.max_level_);
    for (std::uint32_t i = 0; i < count; ++i) builder.insert(i);
    return graph;
}

std::vector<std::pair<double, std::uint32_t>> HnswGraph::search(
    const float* data, std::size_t dim, const float* query, std::size_t k,
    std::size_t ef) const {
    if (links_.empty() || max_level_ < 0) return {};

    std::uint32_t ep = entry_;
    for (int lc = max_level_; lc > 0; --lc)
        ep = greedy_step(links_, data, dim, query, ep, lc);
    std::vector<Cand> found =
        search_layer(links_, data, dim, query, ep, std::max(ef, k), 0);

    std::vector<std::pair<double, std::uint32_t>> out;
    out.reserve(std::min(k, found.size()));
    for (std::size_t i = 0; i < found.size() && i < k; ++i)
        out.emplace_back(found[i].sim, found[i].id);
    return out;
}

void HnswGraph::save(std::ostream& out) const {
    write_u32(out, 1);  // format version
    write_u64(out, links_.size());
    write_u32(out, entry_);
    write_u32(out, static_cast<std::uint32_t>(max_level_ + 1));
    write_u64(out, params_.M);
    write_u64(out, params_.ef_construction);
    write_u64(out, params_.ef_search);
    write_u64(out, params_.seed);
    for (const auto& node : links_) {
        write_u32(out, static_cast<std::uint32_t>(node.size()));
        for (const auto& level : node) {
            write_u32(out, static_cast<std::uint32_t>(level.size()));
            for (std::uint32_t id : level) write_u32(out, id);
        }
    }
    if (!out) throw IoError("graph.bin: write failed");
}

HnswGraph HnswGraph::load(std::istream& in) {
    if (read_u32(in) != 1) throw IoError("graph.bin: unsupported version");
    HnswGraph graph;
    const std::uint64_t count = read_u64(in);
    graph.entry_ = read_u32(in);
    graph.max_level_ = static_cast<int>(read_u32(in)) - 1;
    graph.params_.M = read_u64(in);
    graph.params_.ef_construction = read_u64(in);
    graph.params_.ef_search = read_u64(in);
    graph.params_.seed = read_u64(in);
    graph.links_.resize(count);
    for (auto& node : graph.links_) {
        node.resize(read_u32(in));
        for (auto& level : node) {
            level.resize(read_u32(in));
            for (std::uint32_t& id : level) {
                id = read_u32(in);
                if (id >= count) throw IoError("graph.bin: neighbor out of range");
            }
        }
    }
    return graph;
}

} // namespace raglex
