#pragma once

#include <algorithm>
#include <cmath>

#include "trailmine/model.hpp"

namespace trailmine {

/// Cosine similarity between two fingerprints, always in [0, 1] for RSS
/// vectors (all components share sign).
struct SimilarityScore {
    double value = 0.0;

    friend auto operator<=>(const SimilarityScore&, const SimilarityScore&) = default;
};

/// Cosine similarity over raw dBm values: the dot product runs over common
/// MACs only, while each self dot product runs over all MACs of its
/// fingerprint. No common MAC means similarity 0. Identical inputs score
/// exactly 1.
inline SimilarityScore cosine_similarity(const Fingerprint& a, const Fingerprint& b) {
    if (a.empty() || b.empty()) throw EmptyFingerprint{};
    if (a.entries == b.entries) return {1.0};

    double common_dot = 0.0;
    auto ia = a.entries.begin();
    auto ib = b.entries.begin();
    while (ia != a.entries.end() && ib != b.entries.end()) {
        if (ia->first < ib->first) ++ia;
        else if (ib->first < ia->first) ++ib;
        else {
            common_dot += ia->second * ib->second;
            ++ia, ++ib;
        }
    }
    if (common_dot == 0.0) return {0.0};

    double da = 0.0, db = 0.0;
    for (const auto& [mac, rss] : a.entries) da += rss * rss;
    for (const auto& [mac, rss] : b.entries) db += rss * rss;

    const double score = common_dot / (std::sqrt(da) * std::sqrt(db));
    return {std::clamp(score, 0.0, 1.0)};
}

/// Adaptive threshold rule: the low threshold applies when both fingerprints
/// are small (at most ap_low_count MACs each), the high threshold otherwise.
/// Setting eps_low == eps_high degenerates to a fixed threshold.
inline double compute_threshold(const Fingerprint& a, const Fingerprint& b,
                                const Config& cfg) {
    const auto limit = static_cast<std::size_t>(cfg.ap_low_count);
    if (a.size() <= limit && b.size() <= limit) return cfg.eps_low;
    return cfg.eps_high;
}

}  // namespace trailmine
