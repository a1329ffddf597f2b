#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "trailmine/dbscan.hpp"
#include "trailmine/geo.hpp"
#include "trailmine/gps_pipeline.hpp"
#include "trailmine/model.hpp"
#include "trailmine/similarity.hpp"

namespace trailmine {

enum class RepresentativeMode {
    averaged_high_accuracy,
    best_of_low_accuracy,
};

inline const char* to_string(RepresentativeMode m) {
    return m == RepresentativeMode::averaged_high_accuracy ? "averaged_high_accuracy"
                                                           : "best_of_low_accuracy";
}

/// One simplified travel location: a group of similar in-transit scans mapped
/// to a single representative position.
struct PathCluster {
    std::vector<std::size_t> member_indices;
    GpsPoint representative;
    RepresentativeMode mode = RepresentativeMode::averaged_high_accuracy;
};

struct SweepPoint {
    double eps = 0.0;
    std::size_t cluster_count = 0;
    double avg_distance_error_m = 0.0;
};

namespace detail {

inline std::optional<std::size_t> nearest_index_by_time(const std::vector<int64_t>& ts,
                                                        int64_t t, int64_t tolerance) {
    std::optional<std::size_t> best;
    int64_t best_skew = tolerance + 1;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const int64_t skew = std::llabs(ts[i] - t);
        if (skew < best_skew) {
            best_skew = skew;
            best = i;
        }
    }
    return best;
}

}  // namespace detail

/// Travel samples: everything recorded strictly between consecutive stays.
/// Samples before the first stay or after the last are not travel between
/// known places and are excluded. With no stays at all there is nothing to
/// exclude, so the whole input is the trajectory.
inline std::pair<GpsTrack, ScanList> extract_travel_windows(
    const std::vector<StayPoint>& stays, const GpsTrack& track, const ScanList& scans) {
    for (std::size_t i = 1; i < stays.size(); ++i)
        if (stays[i].arrive < stays[i - 1].arrive)
            throw std::invalid_argument("stay points are not temporally ordered");

    GpsTrack out_track;
    out_track.user_id = track.user_id;
    ScanList out_scans;
    out_scans.user_id = scans.user_id;

    if (stays.empty()) {
        out_track.points = track.points;
        out_scans.scans = scans.scans;
        return {std::move(out_track), std::move(out_scans)};
    }

    const auto in_gap = [&](int64_t t) {
        for (std::size_t i = 0; i + 1 < stays.size(); ++i)
            if (t > stays[i].depart && t < stays[i + 1].arrive) return true;
        return false;
    };
    for (const auto& p : track.points)
        if (in_gap(p.timestamp)) out_track.points.push_back(p);
    for (const auto& s : scans.scans)
        if (in_gap(s.timestamp)) out_scans.scans.push_back(s);
    return {std::move(out_track), std::move(out_scans)};
}

/// Groups trajectory scans at a fixed similarity threshold (minPts 1, so
/// every scan lands in a cluster) and maps each group to one GPS point. When
/// any member has a temporally matched fix at or under the accuracy cutoff,
/// the representative averages all such fixes; otherwise it falls back to the
/// matched fix with the best (lowest) accuracy value.
inline std::vector<PathCluster> cluster_path(const ScanList& scans,
                                             const GpsTrack& track, const Config& cfg) {
    const std::size_t n = scans.scans.size();
    if (n == 0) return {};
    if (track.points.empty()) throw MissingGpsTrack{};

    std::vector<Fingerprint> fps;
    fps.reserve(n);
    for (const auto& s : scans.scans) fps.push_back(Fingerprint::from_scan(s));

    const double eps = cfg.micromobility_eps;
    const auto labels = detail::dbscan_labels(
        n, static_cast<std::size_t>(cfg.min_pts_micro), [&](std::size_t anchor) {
            std::vector<std::size_t> out;
            for (std::size_t i = 0; i < n; ++i) {
                if (i == anchor) {
                    out.push_back(i);
                    continue;
                }
                if (fps[anchor].empty() || fps[i].empty()) continue;
                if (cosine_similarity(fps[anchor], fps[i]).value >= eps)
                    out.push_back(i);
            }
            return out;
        });

    int cluster_count = 0;
    for (int label : labels) cluster_count = std::max(cluster_count, label + 1);
    std::vector<PathCluster> clusters(static_cast<std::size_t>(cluster_count));
    for (std::size_t i = 0; i < n; ++i)
        clusters[static_cast<std::size_t>(labels[i])].member_indices.push_back(i);

    std::vector<int64_t> fix_ts;
    fix_ts.reserve(track.points.size());
    for (const auto& p : track.points) fix_ts.push_back(p.timestamp);
    const int64_t tolerance = cfg.nearest_fix_tolerance_s();

    for (auto& cluster : clusters) {
        std::vector<const GpsPoint*> matched;
        for (const std::size_t m : cluster.member_indices) {
            const auto idx = detail::nearest_index_by_time(
                fix_ts, scans.scans[m].timestamp, tolerance);
            if (idx) matched.push_back(&track.points[*idx]);
        }
        if (matched.empty()) {
            // No member has a fix within the skew budget; fall back to the
            // globally nearest fix so the cluster still has a location.
            const auto idx = detail::nearest_index_by_time(
                fix_ts, scans.scans[cluster.member_indices.front()].timestamp, INT64_MAX - 1);
            matched.push_back(&track.points[*idx]);
        }

        std::vector<const GpsPoint*> accurate;
        for (const auto* fix : matched)
            if (fix->accuracy <= cfg.gps_accuracy_max_m) accurate.push_back(fix);

        if (!accurate.empty()) {
            double lat = 0.0, lon = 0.0, acc = 0.0;
            for (const auto* fix : accurate) {
                lat += fix->latitude;
                lon += fix->longitude;
                acc += fix->accuracy;
            }
            const auto k = static_cast<double>(accurate.size());
            cluster.representative = {lat / k, lon / k, acc / k,
                                      accurate.front()->timestamp};
            cluster.mode = RepresentativeMode::averaged_high_accuracy;
        } else {
            const GpsPoint* best = matched.front();
            for (const auto* fix : matched)
                if (fix->accuracy < best->accuracy) best = fix;
            cluster.representative = *best;
            cluster.mode = RepresentativeMode::best_of_low_accuracy;
        }
    }
    return clusters;
}

/// Mean distance from each trajectory fix to the representative of the
/// cluster its nearest-in-time scan belongs to. Fixes with no scan inside
/// the skew budget carry no error signal and are skipped.
inline double avg_distance_error_m(const std::vector<PathCluster>& clusters,
                                   const ScanList& scans, const GpsTrack& track,
                                   const Config& cfg) {
    if (clusters.empty()) return 0.0;

    std::vector<std::size_t> scan_cluster(scans.scans.size());
    for (std::size_t c = 0; c < clusters.size(); ++c)
        for (const std::size_t m : clusters[c].member_indices) scan_cluster[m] = c;

    std::vector<int64_t> scan_ts;
    scan_ts.reserve(scans.scans.size());
    for (const auto& s : scans.scans) scan_ts.push_back(s.timestamp);
    const int64_t tolerance = cfg.nearest_fix_tolerance_s();

    double sum = 0.0;
    std::size_t counted = 0;
    for (const auto& fix : track.points) {
        const auto idx = detail::nearest_index_by_time(scan_ts, fix.timestamp, tolerance);
        if (!idx) continue;
        const auto& rep = clusters[scan_cluster[*idx]].representative;
        sum += haversine_m(fix.position(), rep.position());
        ++counted;
    }
    return counted == 0 ? 0.0 : sum / static_cast<double>(counted);
}

/// Runs the path clustering across a grid of thresholds and reports the
/// cluster-count / distance-error trade-off for each.
inline std::vector<SweepPoint> sweep_threshold(const ScanList& scans,
                                               const GpsTrack& track,
                                               const std::vector<double>& eps_values,
                                               const Config& cfg) {
    if (eps_values.empty()) throw std::invalid_argument("no threshold values to sweep");
    std::vector<SweepPoint> out;
    out.reserve(eps_values.size());
    for (const double eps : eps_values) {
        Config local = cfg;
        local.micromobility_eps = eps;
        const auto clusters = cluster_path(scans, track, local);
        SweepPoint point;
        point.eps = eps;
        point.cluster_count = clusters.size();
        point.avg_distance_error_m = avg_distance_error_m(clusters, scans, track, local);
        out.push_back(point);
    }
    return out;
}

}  // namespace trailmine
