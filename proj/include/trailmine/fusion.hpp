#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "trailmine/geo.hpp"
#include "trailmine/gps_pipeline.hpp"
#include "trailmine/model.hpp"
#include "trailmine/wifi_cluster.hpp"

namespace trailmine {

// ---------------------------------------------------------------------------
// Heatmap
// ---------------------------------------------------------------------------

/// Equirectangular occupancy grid. Cells are square in meters at ref_lat and
/// addressed on an absolute (col, row) lattice, so two heatmaps with the same
/// ref_lat share cell boundaries.
struct Heatmap {
    double cell_m = 25.0;
    double ref_lat = 0.0;
    std::map<std::pair<int64_t, int64_t>, std::size_t> cells;

    std::size_t total() const {
        std::size_t sum = 0;
        for (const auto& [cell, count] : cells) sum += count;
        return sum;
    }

    /// South-west corner of a cell, for rendering the grid.
    LatLon cell_origin(int64_t col, int64_t row) const {
        return {static_cast<double>(row) * cell_m / meters_per_deg_lat(),
                static_cast<double>(col) * cell_m / meters_per_deg_lon(ref_lat)};
    }
};

/// Bins points into cells sized at the input's mean latitude. Every point
/// lands in exactly one cell, so counts always sum to the input size.
inline Heatmap build_heatmap(const std::vector<GpsPoint>& points, const Config& cfg) {
    Heatmap map;
    map.cell_m = cfg.heatmap_cell_m;
    if (points.empty()) return map;

    double lat_sum = 0.0;
    for (const auto& p : points) lat_sum += p.latitude;
    map.ref_lat = lat_sum / static_cast<double>(points.size());

    const double m_lon = meters_per_deg_lon(map.ref_lat);
    const double m_lat = meters_per_deg_lat();
    for (const auto& p : points) {
        const auto col = static_cast<int64_t>(std::floor(p.longitude * m_lon / map.cell_m));
        const auto row = static_cast<int64_t>(std::floor(p.latitude * m_lat / map.cell_m));
        ++map.cells[{col, row}];
    }
    return map;
}

// ---------------------------------------------------------------------------
// Home detection
// ---------------------------------------------------------------------------

/// The stay region with the largest accumulated dwell; ties go to the region
/// visited earliest.
inline GeoCluster identify_home(const std::vector<GeoCluster>& regions) {
    if (regions.empty()) throw NoStayPoints{};
    const GeoCluster* best = nullptr;
    for (const auto& region : regions) {
        if (!best || region.total_dwell_s() > best->total_dwell_s() ||
            (region.total_dwell_s() == best->total_dwell_s() &&
             region.first_arrival() < best->first_arrival()))
            best = &region;
    }
    return *best;
}

// ---------------------------------------------------------------------------
// Neighborhood extraction
// ---------------------------------------------------------------------------

/// One place found inside the home stay region but distinct from home by
/// WiFi signature. `stay` is present when the place could be anchored to
/// nearby high-accuracy fixes; otherwise the place is WiFi-only.
struct FusedPoi {
    PoiCluster cluster;
    std::optional<StayPoint> stay;
};

struct NeighborhoodReport {
    StayPoint home;
    std::optional<PoiCluster> home_cluster;
    std::vector<FusedPoi> neighborhood_pois;
    Heatmap heatmap;
    std::size_t moving_points_total = 0;
};

namespace detail {

/// Merged, window-clipped occupancy intervals of a stay region.
inline std::vector<TimeWindow> occupancy_intervals(const GeoCluster& region,
                                                   const TimeWindow& window) {
    std::vector<TimeWindow> spans;
    for (const auto& stay : region.stay_points) {
        const int64_t a = std::max(stay.arrive, window.start);
        const int64_t b = std::min(stay.depart, window.end);
        if (a <= b) spans.push_back({a, b});
    }
    std::sort(spans.begin(), spans.end(),
              [](const TimeWindow& a, const TimeWindow& b) { return a.start < b.start; });
    std::vector<TimeWindow> merged;
    for (const auto& s : spans) {
        if (!merged.empty() && s.start <= merged.back().end)
            merged.back().end = std::max(merged.back().end, s.end);
        else
            merged.push_back(s);
    }
    return merged;
}

inline bool covered(const std::vector<TimeWindow>& spans, int64_t t) {
    for (const auto& s : spans)
        if (s.contains(t)) return true;
    return false;
}

/// Mean position of the temporally nearest accurate fixes for each member
/// scan. Fixes must have accuracy within the cutoff and sit within the skew
/// budget of the scan; returns nothing when no member can be anchored.
inline std::optional<LatLon> anchor_position(const PoiCluster& cluster,
                                             const ScanList& scans,
                                             const GpsTrack& track,
                                             const Config& cfg) {
    const int64_t max_skew = 2 * cfg.scan_interval_s;
    double lat = 0.0, lon = 0.0;
    std::size_t found = 0;
    for (const std::size_t m : cluster.member_indices) {
        const int64_t t = scans.scans[m].timestamp;
        const GpsPoint* best = nullptr;
        int64_t best_skew = max_skew + 1;
        for (const auto& fix : track.points) {
            if (fix.accuracy > cfg.gps_accuracy_max_m) continue;
            const int64_t skew = std::llabs(fix.timestamp - t);
            if (skew < best_skew) {
                best_skew = skew;
                best = &fix;
            }
        }
        if (best) {
            lat += best->latitude;
            lon += best->longitude;
            ++found;
        }
    }
    if (found == 0) return std::nullopt;
    return LatLon{lat / static_cast<double>(found), lon / static_cast<double>(found)};
}

}  // namespace detail

/// Fuses the home stay region with WiFi clustering to surface places a GPS
/// stay analysis cannot separate. Scans taken while the user occupied the
/// home region are clustered; the highest-dwell cluster is recognized as home
/// itself and the rest become neighborhood places. Window fixes outside every
/// stay interval are the moving points and feed the heatmap.
inline NeighborhoodReport extract_neighborhood(const GpsTrack& track,
                                               const ScanList& scans,
                                               const GeoCluster& home,
                                               const TimeWindow& window,
                                               const Config& cfg) {
    if (window.empty()) throw std::invalid_argument("empty analysis window");

    NeighborhoodReport report;
    report.home.centroid = home.centroid;
    report.home.arrive = home.first_arrival();
    report.home.depart = 0;
    for (const auto& s : home.stay_points)
        report.home.depart = std::max(report.home.depart, s.depart);
    report.home.source = StaySource::fused;
    report.home.label = "home";

    const GpsTrack cleaned = clean_track(track, cfg);
    const std::vector<StayPoint> stays = extract_stay_points(cleaned, cfg);

    // Scans taken while occupying the home region.
    const auto occupancy = detail::occupancy_intervals(home, window);
    ScanList home_scans;
    home_scans.user_id = scans.user_id;
    for (const auto& s : scans.scans)
        if (window.contains(s.timestamp) && detail::covered(occupancy, s.timestamp))
            home_scans.scans.push_back(s);

    if (!home_scans.scans.empty()) {
        ClusterRun run = extract_poi(home_scans, cfg);
        if (!run.clusters.empty()) {
            std::size_t home_idx = 0;
            for (std::size_t c = 1; c < run.clusters.size(); ++c)
                if (run.clusters[c].total_dwell_s() >
                    run.clusters[home_idx].total_dwell_s())
                    home_idx = c;
            report.home_cluster = run.clusters[home_idx];

            for (std::size_t c = 0; c < run.clusters.size(); ++c) {
                if (c == home_idx) continue;
                FusedPoi poi;
                poi.cluster = run.clusters[c];
                if (const auto anchor =
                        detail::anchor_position(poi.cluster, home_scans, cleaned, cfg)) {
                    StayPoint stay;
                    stay.centroid = *anchor;
                    stay.arrive = poi.cluster.visits.front().arrive;
                    stay.depart = poi.cluster.visits.back().depart;
                    stay.source = StaySource::fused;
                    stay.label = poi_display_id(poi.cluster.poi_id);
                    poi.stay = stay;
                }
                report.neighborhood_pois.push_back(std::move(poi));
            }
        }
    }

    // Moving points: window fixes not covered by any stay interval.
    std::vector<TimeWindow> stay_spans;
    for (const auto& s : stays) stay_spans.push_back({s.arrive, s.depart});
    std::vector<GpsPoint> moving;
    for (const auto& p : cleaned.points)
        if (window.contains(p.timestamp) && !detail::covered(stay_spans, p.timestamp))
            moving.push_back(p);
    report.moving_points_total = moving.size();
    report.heatmap = build_heatmap(moving, cfg);
    return report;
}

}  // namespace trailmine
