#pragma once

#include <cstddef>
#include <deque>
#include <vector>

namespace trailmine::detail {

inline constexpr int kDbscanUndefined = -2;
inline constexpr int kDbscanNoise = -1;

/// Order-deterministic DBSCAN label assignment. `neighbors(i)` must return
/// the indices within range of point i, including i itself. Points are
/// visited in index order; border points keep the first cluster that reaches
/// them. Returns one label per point: a cluster id in discovery order, or
/// kDbscanNoise.
template <typename NeighborFn>
std::vector<int> dbscan_labels(std::size_t n, std::size_t min_pts, NeighborFn&& neighbors) {
    std::vector<int> labels(n, kDbscanUndefined);
    int next_cluster = 0;

    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] != kDbscanUndefined) continue;
        const auto neighborhood = neighbors(i);
        if (neighborhood.size() < min_pts) {
            labels[i] = kDbscanNoise;
            continue;
        }
        const int cluster = next_cluster++;
        labels[i] = cluster;
        std::deque<std::size_t> seeds(neighborhood.begin(), neighborhood.end());
        while (!seeds.empty()) {
            const std::size_t j = seeds.front();
            seeds.pop_front();
            if (labels[j] == kDbscanNoise) {
                labels[j] = cluster;  // border point
                continue;
            }
            if (labels[j] != kDbscanUndefined) continue;
            labels[j] = cluster;
            const auto expansion = neighbors(j);
            if (expansion.size() >= min_pts)
                seeds.insert(seeds.end(), expansion.begin(), expansion.end());
        }
    }
    return labels;
}

}  // namespace trailmine::detail
