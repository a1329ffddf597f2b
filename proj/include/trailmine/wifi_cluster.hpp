#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <vector>

#include "trailmine/dbscan.hpp"
#include "trailmine/model.hpp"
#include "trailmine/similarity.hpp"

namespace trailmine {

/// Result of clustering one scan list: the clusters, the indices left as
/// noise, and the number of pairwise similarity evaluations spent (bounded by
/// n^2 for n input scans).
struct ClusterRun {
    ScanList input;
    std::vector<PoiCluster> clusters;
    std::vector<std::size_t> noise;
    std::size_t similarity_evaluations = 0;
};

namespace detail {

/// Pairwise score used during clustering. Scans without observations match
/// nothing; every other pair goes through the cosine metric.
inline double scan_pair_score(const Fingerprint& a, const Fingerprint& b) {
    if (a.empty() || b.empty()) return 0.0;
    return cosine_similarity(a, b).value;
}

inline std::vector<std::size_t> query_neighbors(std::size_t anchor,
                                                const std::vector<Fingerprint>& fps,
                                                const Config& cfg,
                                                std::size_t& evaluations) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fps.size(); ++i) {
        if (i == anchor) {
            out.push_back(i);  // self similarity is 1, never below threshold
            continue;
        }
        if (fps[anchor].empty() || fps[i].empty()) continue;
        ++evaluations;
        const double score = cosine_similarity(fps[anchor], fps[i]).value;
        if (score >= compute_threshold(fps[anchor], fps[i], cfg)) out.push_back(i);
    }
    return out;
}

/// Splits the time-ordered member scans into visit intervals. A gap of more
/// than twice the scan interval between consecutive members starts a new
/// visit.
inline std::vector<VisitInterval> split_visits(const std::vector<std::size_t>& members,
                                               const ScanList& scans,
                                               const Config& cfg) {
    std::vector<VisitInterval> visits;
    const int64_t max_gap = 2 * cfg.scan_interval_s;
    for (std::size_t m : members) {
        const int64_t t = scans.scans[m].timestamp;
        if (!visits.empty() && t - visits.back().depart <= max_gap)
            visits.back().depart = t;
        else
            visits.push_back({t, t});
    }
    return visits;
}

}  // namespace detail

/// Indices of every scan whose similarity to the anchor meets the adaptive
/// threshold for the pair. The anchor itself is always part of the set.
inline std::vector<std::size_t> neighbors_of(const ScanResult& anchor,
                                             const ScanList& all,
                                             const Config& cfg) {
    const Fingerprint anchor_fp = Fingerprint::from_scan(anchor);
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < all.scans.size(); ++i) {
        if (all.scans[i] == anchor) {
            out.push_back(i);
            continue;
        }
        const Fingerprint fp = Fingerprint::from_scan(all.scans[i]);
        if (detail::scan_pair_score(anchor_fp, fp) >=
            compute_threshold(anchor_fp, fp, cfg))
            out.push_back(i);
    }
    return out;
}

/// Per-MAC mean RSS over the member scans in which the MAC appears. A MAC
/// absent from a member scan does not contribute an implicit zero.
inline Fingerprint build_fingerprint(const PoiCluster& cluster, const ScanList& scans) {
    if (cluster.member_indices.empty()) throw EmptyCluster{};
    std::map<Mac, std::pair<double, int>> sums;
    for (std::size_t m : cluster.member_indices)
        for (const auto& [mac, rss] : scans.scans[m].observations) {
            auto& [sum, count] = sums[mac];
            sum += rss;
            ++count;
        }
    Fingerprint fp;
    for (const auto& [mac, sc] : sums)
        fp.entries.emplace(mac, sc.first / sc.second);
    return fp;
}

/// Density clustering over one scan list. Points are processed in list order,
/// neighborhoods use the pairwise adaptive threshold, and clusters grow by
/// merging the neighborhoods of core members. Border points are claimed by
/// the first cluster that reaches them, which keeps runs deterministic.
inline ClusterRun extract_poi(const ScanList& scans, const Config& cfg) {
    const std::size_t n = scans.scans.size();
    ClusterRun run;
    run.input = scans;

    std::vector<Fingerprint> fps;
    fps.reserve(n);
    for (const auto& s : scans.scans) fps.push_back(Fingerprint::from_scan(s));

    const auto labels = detail::dbscan_labels(
        n, static_cast<std::size_t>(cfg.min_pts_poi), [&](std::size_t i) {
            return detail::query_neighbors(i, fps, cfg, run.similarity_evaluations);
        });

    int cluster_count = 0;
    for (int label : labels) cluster_count = std::max(cluster_count, label + 1);
    run.clusters.resize(static_cast<std::size_t>(cluster_count));
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] == detail::kDbscanNoise)
            run.noise.push_back(i);
        else
            run.clusters[static_cast<std::size_t>(labels[i])].member_indices.push_back(i);
    }
    for (int c = 0; c < cluster_count; ++c) {
        auto& cluster = run.clusters[static_cast<std::size_t>(c)];
        cluster.poi_id = c;
        cluster.fingerprint = build_fingerprint(cluster, scans);
        cluster.visits = detail::split_visits(cluster.member_indices, scans, cfg);
    }
    return run;
}

/// Matches a candidate fingerprint against known POIs: the highest-similarity
/// POI wins (ties to the lowest poi_id) provided that similarity passes the
/// pair's threshold; otherwise the candidate is a new place.
inline std::optional<int> match_revisit(
    const Fingerprint& candidate,
    const std::vector<std::pair<int, Fingerprint>>& known,
    const Config& cfg) {
    if (candidate.empty()) return std::nullopt;
    std::optional<int> best_id;
    double best_score = -1.0;
    const Fingerprint* best_fp = nullptr;
    for (const auto& [poi_id, fp] : known) {
        if (fp.empty()) continue;
        const double score = cosine_similarity(candidate, fp).value;
        if (score > best_score || (score == best_score && best_id && poi_id < *best_id)) {
            best_score = score;
            best_id = poi_id;
            best_fp = &fp;
        }
    }
    if (!best_id) return std::nullopt;
    if (best_score < compute_threshold(candidate, *best_fp, cfg)) return std::nullopt;
    return best_id;
}

}  // namespace trailmine
