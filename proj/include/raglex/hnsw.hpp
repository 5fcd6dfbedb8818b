#pragma once

#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

namespace raglex {

struct HnswParams {
    std::size_t M = 16;
    std::size_t ef_construction = 200;
    std::size_t ef_search = 100;
    std::uint64_t seed = 42;
};

/// Navigable small-world graph over unit vectors with inner-product
/// similarity. Nodes are inserted serially in ordinal order; the level
/// generator is seeded, so a build is a pure function of (data, params).
class HnswGraph {
public:
    HnswGraph() = default;

    static HnswGraph build(const float* data, std::size_t count, std::size_t dim,
                           const HnswParams& params);

    /// Approximate top-k by descending similarity, ties by ascending ordinal.
    /// The beam width is max(ef, k).
    std::vector<std::pair<double, std::uint32_t>> search(const float* data,
                                                         std::size_t dim,
                                                         const float* query,
                                                         std::size_t k,
                                                         std::size_t ef) const;

    void save(std::ostream& out) const;
    static HnswGraph load(std::istream& in);

    bool empty() const { return links_.empty(); }
    std::size_t size() const { return links_.size(); }
    const HnswParams& params() const { return params_; }
    int max_level() const { return max_level_; }
    std::uint32_t entry_point() const { return entry_; }
    const std::vector<std::vector<std::uint32_t>>& neighbors(std::uint32_t node) const {
        return links_[node];
    }

private:
    // links_[node][level] = neighbor ordinals; node participates in levels
    // 0..links_[node].size()-1.
    std::vector<std::vector<std::vector<std::uint32_t>>> links_;
    std::uint32_t entry_ = 0;
    int max_level_ = -1;
    HnswParams params_;
};

} // namespace raglex
