#pragma once

#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "trailmine/fusion.hpp"
#include "trailmine/geo.hpp"
#include "trailmine/micromobility.hpp"

namespace trailmine::geojson {

using json = nlohmann::ordered_json;

inline json coords(const LatLon& p) { return json::array({p.lon, p.lat}); }

inline json point_feature(const LatLon& p, json properties) {
    json f;
    f["type"] = "Feature";
    f["geometry"] = {{"type", "Point"}, {"coordinates", coords(p)}};
    f["properties"] = std::move(properties);
    return f;
}

inline json polygon_feature(const std::vector<LatLon>& ring, json properties) {
    auto outer = json::array();
    for (const auto& p : ring) outer.push_back(coords(p));
    if (!ring.empty()) outer.push_back(coords(ring.front()));  // close the ring
    json f;
    f["type"] = "Feature";
    f["geometry"] = {{"type", "Polygon"}, {"coordinates", json::array({std::move(outer)})}};
    f["properties"] = std::move(properties);
    return f;
}

inline json line_feature(const std::vector<LatLon>& points, json properties) {
    auto line = json::array();
    for (const auto& p : points) line.push_back(coords(p));
    json f;
    f["type"] = "Feature";
    f["geometry"] = {{"type", "LineString"}, {"coordinates", std::move(line)}};
    f["properties"] = std::move(properties);
    return f;
}

/// Wraps features into a FeatureCollection. `foreign` lands next to the
/// features (manifest digest, generator info).
inline json feature_collection(std::vector<json> features, json foreign = {}) {
    json fc;
    fc["type"] = "FeatureCollection";
    if (!foreign.is_null())
        for (auto& [key, value] : foreign.items()) fc[key] = value;
    fc["features"] = std::move(features);
    return fc;
}

/// One polygon per occupied cell, carrying its visit count.
inline std::vector<json> heatmap_features(const Heatmap& map) {
    std::vector<json> features;
    features.reserve(map.cells.size());
    for (const auto& [cell, count] : map.cells) {
        const auto [col, row] = cell;
        const LatLon sw = map.cell_origin(col, row);
        const LatLon ne = map.cell_origin(col + 1, row + 1);
        const std::vector<LatLon> ring{
            sw, {sw.lat, ne.lon}, ne, {ne.lat, sw.lon}};
        features.push_back(polygon_feature(
            ring, {{"kind", "heatmap_cell"}, {"count", count}}));
    }
    return features;
}

}  // namespace trailmine::geojson
