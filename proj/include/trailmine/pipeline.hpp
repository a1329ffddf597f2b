#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "trailmine/community.hpp"
#include "trailmine/fusion.hpp"
#include "trailmine/geojson.hpp"
#include "trailmine/gps_pipeline.hpp"
#include "trailmine/micromobility.hpp"
#include "trailmine/model.hpp"
#include "trailmine/wifi_cluster.hpp"

namespace trailmine::pipeline {

// ---------------------------------------------------------------------------
// Civil time rendering
// ---------------------------------------------------------------------------

/// Gregorian date for a day count relative to 1970-01-01 (proleptic,
/// era-based conversion).
inline std::tuple<int, int, int> civil_from_days(int64_t z) {
    z += 719468;
    const int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const auto doe = static_cast<uint64_t>(z - era * 146097);
    const uint64_t yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const int64_t y = static_cast<int64_t>(yoe) + era * 400;
    const uint64_t doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const uint64_t mp = (5 * doy + 2) / 153;
    const uint64_t d = doy - (153 * mp + 2) / 5 + 1;
    const uint64_t m = mp < 10 ? mp + 3 : mp - 9;
    return {static_cast<int>(y + (m <= 2)), static_cast<int>(m), static_cast<int>(d)};
}

inline std::string format_date(int64_t epoch_s, int64_t utc_offset_s) {
    const int64_t local = epoch_s + utc_offset_s;
    const int64_t days = local >= 0 ? local / 86400 : (local - 86399) / 86400;
    const auto [y, m, d] = civil_from_days(days);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", y, m, d);
    return buf;
}

inline std::string format_time(int64_t epoch_s, int64_t utc_offset_s) {
    const int64_t local = epoch_s + utc_offset_s;
    const int64_t days = local >= 0 ? local / 86400 : (local - 86399) / 86400;
    const int64_t sod = local - days * 86400;
    char buf[12];
    std::snprintf(buf, sizeof(buf), "%02d:%02d:%02d", static_cast<int>(sod / 3600),
                  static_cast<int>((sod / 60) % 60), static_cast<int>(sod % 60));
    return buf;
}

// ---------------------------------------------------------------------------
// POI pipeline
// ---------------------------------------------------------------------------

struct PoiRow {
    int poi_id = 0;
    int64_t arrive = 0;
    int64_t depart = 0;
};

struct PoiResult {
    std::string user_id;
    TimeWindow window;
    std::vector<StayPoint> stays;
    std::vector<GeoCluster> regions;
    ClusterRun run;                              // over stay-covered scans
    std::vector<PoiRow> rows;                    // one row per visit
    std::map<int, std::optional<LatLon>> anchors;  // poi_id -> position
};

/// Full single-user POI pass: clean the track, find stays and stay regions,
/// cluster the scans recorded while dwelling, and flatten the visits. A place
/// revisited across days stays one cluster, so its poi_id is stable.
inline PoiResult run_poi(const ScanList& scans, const GpsTrack& track,
                         const TimeWindow& window, const Config& cfg) {
    if (window.empty()) throw std::invalid_argument("empty analysis window");

    PoiResult result;
    result.user_id = scans.user_id.empty() ? track.user_id : scans.user_id;
    result.window = window;

    const GpsTrack cleaned = clean_track(track, cfg);
    result.stays = extract_stay_points(cleaned, cfg);
    result.regions = cluster_stay_points(result.stays, cfg);

    std::vector<TimeWindow> spans;
    for (const auto& s : result.stays) {
        const int64_t a = std::max(s.arrive, window.start);
        const int64_t b = std::min(s.depart, window.end);
        if (a <= b) spans.push_back({a, b});
    }

    ScanList dwell_scans;
    dwell_scans.user_id = result.user_id;
    for (const auto& s : scans.scans) {
        if (!window.contains(s.timestamp)) continue;
        for (const auto& span : spans) {
            if (span.contains(s.timestamp)) {
                dwell_scans.scans.push_back(s);
                break;
            }
        }
    }

    result.run = extract_poi(dwell_scans, cfg);
    for (const auto& cluster : result.run.clusters) {
        for (const auto& visit : cluster.visits)
            result.rows.push_back({cluster.poi_id, visit.arrive, visit.depart});
        result.anchors[cluster.poi_id] =
            detail::anchor_position(cluster, dwell_scans, cleaned, cfg);
    }
    std::sort(result.rows.begin(), result.rows.end(), [](const PoiRow& a, const PoiRow& b) {
        return std::tie(a.arrive, a.poi_id) < std::tie(b.arrive, b.poi_id);
    });
    return result;
}

inline std::string poi_csv(const PoiResult& r, const Config& cfg,
                           const std::string& digest) {
    std::string out = "# manifest " + digest + "\n";
    out += "date,start_time,end_time,poi_id\n";
    for (const auto& row : r.rows) {
        out += format_date(row.arrive, cfg.utc_offset_s);
        out += ',';
        out += format_time(row.arrive, cfg.utc_offset_s);
        out += ',';
        out += format_time(row.depart, cfg.utc_offset_s);
        out += ',';
        out += poi_display_id(row.poi_id);
        out += '\n';
    }
    return out;
}

inline std::string poi_geojson(const PoiResult& r, const std::string& digest) {
    std::vector<geojson::json> features;
    for (const auto& cluster : r.run.clusters) {
        const auto anchor = r.anchors.at(cluster.poi_id);
        if (!anchor) continue;  // WiFi-only place, no position to draw
        features.push_back(geojson::point_feature(
            *anchor, {{"user", r.user_id},
                      {"poi_id", poi_display_id(cluster.poi_id)},
                      {"dwell_s", cluster.total_dwell_s()},
                      {"visits", cluster.visits.size()},
                      {"ap_count", cluster.fingerprint.size()}}));
    }
    return geojson::feature_collection(std::move(features), {{"manifest", digest}})
               .dump(2) +
           "\n";
}

// ---------------------------------------------------------------------------
// Neighborhood pipeline
// ---------------------------------------------------------------------------

struct NeighborhoodResult {
    std::string user_id;
    TimeWindow window;
    std::vector<GeoCluster> regions;
    GeoCluster home_region;
    NeighborhoodReport report;
};

inline NeighborhoodResult run_neighborhood(const ScanList& scans, const GpsTrack& track,
                                           const TimeWindow& window, const Config& cfg) {
    if (window.empty()) throw std::invalid_argument("empty analysis window");

    NeighborhoodResult result;
    result.user_id = scans.user_id.empty() ? track.user_id : scans.user_id;
    result.window = window;

    const GpsTrack cleaned = clean_track(track, cfg);
    const auto stays = extract_stay_points(cleaned, cfg);
    result.regions = cluster_stay_points(stays, cfg);
    result.home_region = identify_home(result.regions);
    result.report = extract_neighborhood(track, scans, result.home_region, window, cfg);
    return result;
}

inline std::string neighborhood_geojson(const NeighborhoodResult& r,
                                        const std::string& digest) {
    std::vector<geojson::json> features;
    features.push_back(geojson::point_feature(
        r.report.home.centroid,
        {{"kind", "home"},
         {"user", r.user_id},
         {"arrive", r.report.home.arrive},
         {"depart", r.report.home.depart}}));
    for (const auto& poi : r.report.neighborhood_pois) {
        geojson::json props = {{"kind", "neighborhood_poi"},
                               {"user", r.user_id},
                               {"poi_id", poi_display_id(poi.cluster.poi_id)},
                               {"dwell_s", poi.cluster.total_dwell_s()},
                               {"anchored", poi.stay.has_value()}};
        if (poi.stay)
            features.push_back(geojson::point_feature(poi.stay->centroid, props));
    }
    for (auto& cell : geojson::heatmap_features(r.report.heatmap))
        features.push_back(std::move(cell));
    return geojson::feature_collection(
               std::move(features),
               {{"manifest", digest},
                {"moving_points_total", r.report.moving_points_total},
                {"wifi_only_pois", [&] {
                     auto arr = geojson::json::array();
                     for (const auto& poi : r.report.neighborhood_pois)
                         if (!poi.stay)
                             arr.push_back(poi_display_id(poi.cluster.poi_id));
                     return arr;
                 }()}})
               .dump(2) +
           "\n";
}

// ---------------------------------------------------------------------------
// Micro-mobility pipeline
// ---------------------------------------------------------------------------

struct MicroResult {
    std::string user_id;
    TimeWindow window;
    ScanList trajectory_scans;
    GpsTrack trajectory_track;
    std::vector<PathCluster> clusters;  // at cfg.micromobility_eps
    std::vector<SweepPoint> sweep;
};

inline MicroResult run_micro(const ScanList& scans, const GpsTrack& track,
                             const TimeWindow& window,
                             const std::vector<double>& eps_values, const Config& cfg) {
    if (window.empty()) throw std::invalid_argument("empty analysis window");

    MicroResult result;
    result.user_id = scans.user_id.empty() ? track.user_id : scans.user_id;
    result.window = window;

    const GpsTrack cleaned = clean_track(track, cfg);
    const auto stays = extract_stay_points(cleaned, cfg);

    GpsTrack in_window;
    in_window.user_id = cleaned.user_id;
    for (const auto& p : cleaned.points)
        if (window.contains(p.timestamp)) in_window.points.push_back(p);
    ScanList scans_in_window;
    scans_in_window.user_id = scans.user_id;
    for (const auto& s : scans.scans)
        if (window.contains(s.timestamp)) scans_in_window.scans.push_back(s);

    auto [traj_track, traj_scans] =
        extract_travel_windows(stays, in_window, scans_in_window);
    result.trajectory_track = std::move(traj_track);
    result.trajectory_scans = std::move(traj_scans);

    result.clusters = cluster_path(result.trajectory_scans, result.trajectory_track, cfg);
    if (!eps_values.empty())
        result.sweep = sweep_threshold(result.trajectory_scans, result.trajectory_track,
                                       eps_values, cfg);
    return result;
}

inline std::string micro_sweep_csv(const std::vector<MicroResult>& results,
                                   const std::string& digest) {
    std::string out = "# manifest " + digest + "\n";
    out += "user,eps,cluster_count,avg_distance_error_m\n";
    char buf[64];
    for (const auto& r : results) {
        for (const auto& point : r.sweep) {
            std::snprintf(buf, sizeof(buf), ",%.6g,%zu,%.3f\n", point.eps,
                          point.cluster_count, point.avg_distance_error_m);
            out += r.user_id;
            out += buf;
        }
    }
    return out;
}

inline std::string micro_geojson(const std::vector<MicroResult>& results,
                                 const std::string& digest) {
    std::vector<geojson::json> features;
    std::size_t total_scans = 0, total_clusters = 0;
    for (const auto& r : results) {
        total_scans += r.trajectory_scans.scans.size();
        total_clusters += r.clusters.size();
        std::vector<LatLon> path;
        for (std::size_t c = 0; c < r.clusters.size(); ++c) {
            const auto& cluster = r.clusters[c];
            const LatLon pos = cluster.representative.position();
            path.push_back(pos);
            features.push_back(geojson::point_feature(
                pos, {{"kind", "path_cluster"},
                      {"user", r.user_id},
                      {"cluster", c},
                      {"members", cluster.member_indices.size()},
                      {"mode", to_string(cluster.mode)},
                      {"accuracy_m", cluster.representative.accuracy}}));
        }
        if (path.size() >= 2)
            features.push_back(geojson::line_feature(
                path, {{"kind", "simplified_path"}, {"user", r.user_id}}));
    }
    return geojson::feature_collection(
               std::move(features),
               {{"manifest", digest},
                {"trajectory_scans", total_scans},
                {"cluster_count", total_clusters}})
               .dump(2) +
           "\n";
}

// ---------------------------------------------------------------------------
// Communities pipeline
// ---------------------------------------------------------------------------

struct CommunityRow {
    std::string user_id;
    int poi_id = 0;
    int community = 0;
};

struct CommunitiesResult {
    SimilarityGraph graph;
    Partition partition;
    std::vector<CommunityRow> rows;
};

/// Optional geographic gate for which POIs enter the cross-user graph.
struct RegionFilter {
    LatLon center;
    double radius_m = 0.0;
};

inline CommunitiesResult run_communities(const std::vector<PoiResult>& per_user,
                                         const std::optional<RegionFilter>& region,
                                         double threshold) {
    std::vector<PoiNode> nodes;
    for (const auto& user : per_user) {
        for (const auto& cluster : user.run.clusters) {
            if (region) {
                const auto& anchor = user.anchors.at(cluster.poi_id);
                if (!anchor || haversine_m(*anchor, region->center) > region->radius_m)
                    continue;
            }
            nodes.push_back({user.user_id, cluster.poi_id, cluster.fingerprint});
        }
    }

    CommunitiesResult result;
    result.graph = build_graph(std::move(nodes), threshold);
    result.partition = louvain(result.graph);
    for (std::size_t i = 0; i < result.graph.nodes.size(); ++i)
        result.rows.push_back({result.graph.nodes[i].user_id,
                               result.graph.nodes[i].poi_id,
                               result.partition.community[i]});
    return result;
}

inline std::string communities_csv(const CommunitiesResult& r, const std::string& digest) {
    std::string out = "# manifest " + digest + "\n";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "# modularity %.9f\n", r.partition.modularity);
    out += buf;
    out += "user,poi_id,community\n";
    for (const auto& row : r.rows) {
        out += row.user_id;
        out += ',';
        out += poi_display_id(row.poi_id);
        out += ',';
        out += std::to_string(row.community);
        out += '\n';
    }
    return out;
}

}  // namespace trailmine::pipeline
