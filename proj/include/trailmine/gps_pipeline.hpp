#pragma once

#include <cstddef>
#include <deque>
#include <string>
#include <vector>

#include "trailmine/geo.hpp"
#include "trailmine/model.hpp"

namespace trailmine {

/// Time-ordered GPS fixes of one user.
struct GpsTrack {
    std::string user_id;
    std::vector<GpsPoint> points;

    std::size_t size() const { return points.size(); }
};

/// Geographically co-located stay points grouped by density clustering.
struct GeoCluster {
    int cluster_id = 0;
    std::vector<StayPoint> stay_points;
    LatLon centroid;

    int64_t total_dwell_s() const {
        int64_t total = 0;
        for (const auto& s : stay_points) total += s.dwell_s();
        return total;
    }

    int64_t first_arrival() const {
        int64_t first = stay_points.empty() ? 0 : stay_points.front().arrive;
        for (const auto& s : stay_points)
            if (s.arrive < first) first = s.arrive;
        return first;
    }
};

/// Drops low-accuracy fixes, repeats of the exact same coordinates, and fixes
/// whose implied speed from the previous kept fix is impossible. Idempotent.
inline GpsTrack clean_track(const GpsTrack& track, const Config& cfg) {
    GpsTrack out;
    out.user_id = track.user_id;
    for (const auto& p : track.points) {
        if (p.accuracy > cfg.gps_accuracy_filter_m) continue;
        if (!out.points.empty()) {
            const GpsPoint& last = out.points.back();
            if (p.timestamp <= last.timestamp) continue;
            if (p.latitude == last.latitude && p.longitude == last.longitude)
                continue;  // zero-distance repeat
            const double dist = haversine_m(last.position(), p.position());
            const double dt = static_cast<double>(p.timestamp - last.timestamp);
            if (dist / dt > cfg.max_speed_mps) continue;
        }
        out.points.push_back(p);
    }
    return out;
}

/// Sliding-window stay-point extraction: a maximal run of fixes all within
/// stay_radius_m of the run's first fix, spanning at least min_dwell_s,
/// becomes one stay point at the mean coordinates of the run.
inline std::vector<StayPoint> extract_stay_points(const GpsTrack& track,
                                                  const Config& cfg) {
    std::vector<StayPoint> stays;
    const auto& pts = track.points;
    std::size_t i = 0;
    while (i < pts.size()) {
        std::size_t j = i;
        while (j + 1 < pts.size() &&
               haversine_m(pts[i].position(), pts[j + 1].position()) <= cfg.stay_radius_m)
            ++j;
        if (pts[j].timestamp - pts[i].timestamp >= cfg.min_dwell_s) {
            double lat = 0.0, lon = 0.0;
            for (std::size_t k = i; k <= j; ++k) {
                lat += pts[k].latitude;
                lon += pts[k].longitude;
            }
            const auto count = static_cast<double>(j - i + 1);
            stays.push_back({{lat / count, lon / count},
                             pts[i].timestamp,
                             pts[j].timestamp,
                             StaySource::gps,
                             {}});
            i = j + 1;
        } else {
            ++i;
        }
    }
    return stays;
}

/// Density clustering of stay points on haversine distance. Stays that end up
/// as noise still become singleton clusters: a visited place counts even when
/// visited once.
inline std::vector<GeoCluster> cluster_stay_points(const std::vector<StayPoint>& stays,
                                                   const Config& cfg) {
    constexpr int kUndefined = -2;
    constexpr int kNoise = -1;

    const std::size_t n = stays.size();
    std::vector<int> labels(n, kUndefined);
    const auto min_pts = static_cast<std::size_t>(cfg.geo_min_pts);
    int next_cluster = 0;

    auto query = [&](std::size_t anchor) {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < n; ++i)
            if (haversine_m(stays[anchor].centroid, stays[i].centroid) <= cfg.geo_eps_m)
                out.push_back(i);
        return out;
    };

    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] != kUndefined) continue;
        auto neighborhood = query(i);
        if (neighborhood.size() < min_pts) {
            labels[i] = kNoise;
            continue;
        }
        const int cluster = next_cluster++;
        labels[i] = cluster;
        std::deque<std::size_t> seeds(neighborhood.begin(), neighborhood.end());
        while (!seeds.empty()) {
            const std::size_t j = seeds.front();
            seeds.pop_front();
            if (labels[j] == kNoise) {
                labels[j] = cluster;
                continue;
            }
            if (labels[j] != kUndefined) continue;
            labels[j] = cluster;
            auto expansion = query(j);
            if (expansion.size() >= min_pts)
                seeds.insert(seeds.end(), expansion.begin(), expansion.end());
        }
    }

    // Promote leftover noise to singletons, in input order.
    for (std::size_t i = 0; i < n; ++i)
        if (labels[i] == kNoise) labels[i] = next_cluster++;

    std::vector<GeoCluster> clusters(static_cast<std::size_t>(next_cluster));
    for (std::size_t i = 0; i < n; ++i)
        clusters[static_cast<std::size_t>(labels[i])].stay_points.push_back(stays[i]);
    for (int c = 0; c < next_cluster; ++c) {
        auto& gc = clusters[static_cast<std::size_t>(c)];
        gc.cluster_id = c;
        double lat = 0.0, lon = 0.0;
        for (const auto& s : gc.stay_points) {
            lat += s.centroid.lat;
            lon += s.centroid.lon;
        }
        const auto count = static_cast<double>(gc.stay_points.size());
        gc.centroid = {lat / count, lon / count};
    }
    return clusters;
}

}  // namespace trailmine
