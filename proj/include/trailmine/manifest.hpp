#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "trailmine/digest.hpp"
#include "trailmine/model.hpp"

namespace trailmine {

inline nlohmann::ordered_json config_to_json(const Config& cfg) {
    nlohmann::ordered_json j;
    j["scan_interval_s"] = cfg.scan_interval_s;
    j["min_dwell_s"] = cfg.min_dwell_s;
    j["min_pts_poi"] = cfg.min_pts_poi;
    j["ap_low_count"] = cfg.ap_low_count;
    j["eps_low"] = cfg.eps_low;
    j["eps_high"] = cfg.eps_high;
    j["louvain_partition_threshold"] = cfg.louvain_partition_threshold;
    j["micromobility_eps"] = cfg.micromobility_eps;
    j["min_pts_micro"] = cfg.min_pts_micro;
    j["gps_accuracy_max_m"] = cfg.gps_accuracy_max_m;
    j["heatmap_cell_m"] = cfg.heatmap_cell_m;
    j["max_speed_mps"] = cfg.max_speed_mps;
    j["gps_accuracy_filter_m"] = cfg.gps_accuracy_filter_m;
    j["stay_radius_m"] = cfg.stay_radius_m;
    j["geo_eps_m"] = cfg.geo_eps_m;
    j["geo_min_pts"] = cfg.geo_min_pts;
    j["max_batch_hours"] = cfg.max_batch_hours;
    j["utc_offset_s"] = cfg.utc_offset_s;
    return j;
}

inline Config config_from_json(const nlohmann::json& j) {
    Config cfg;
    cfg.scan_interval_s = j.value("scan_interval_s", cfg.scan_interval_s);
    cfg.min_dwell_s = j.value("min_dwell_s", cfg.min_dwell_s);
    cfg.min_pts_poi = j.value("min_pts_poi", cfg.min_pts_poi);
    cfg.ap_low_count = j.value("ap_low_count", cfg.ap_low_count);
    cfg.eps_low = j.value("eps_low", cfg.eps_low);
    cfg.eps_high = j.value("eps_high", cfg.eps_high);
    cfg.louvain_partition_threshold =
        j.value("louvain_partition_threshold", cfg.louvain_partition_threshold);
    cfg.micromobility_eps = j.value("micromobility_eps", cfg.micromobility_eps);
    cfg.min_pts_micro = j.value("min_pts_micro", cfg.min_pts_micro);
    cfg.gps_accuracy_max_m = j.value("gps_accuracy_max_m", cfg.gps_accuracy_max_m);
    cfg.heatmap_cell_m = j.value("heatmap_cell_m", cfg.heatmap_cell_m);
    cfg.max_speed_mps = j.value("max_speed_mps", cfg.max_speed_mps);
    cfg.gps_accuracy_filter_m = j.value("gps_accuracy_filter_m", cfg.gps_accuracy_filter_m);
    cfg.stay_radius_m = j.value("stay_radius_m", cfg.stay_radius_m);
    cfg.geo_eps_m = j.value("geo_eps_m", cfg.geo_eps_m);
    cfg.geo_min_pts = j.value("geo_min_pts", cfg.geo_min_pts);
    cfg.max_batch_hours = j.value("max_batch_hours", cfg.max_batch_hours);
    cfg.utc_offset_s = j.value("utc_offset_s", cfg.utc_offset_s);
    return cfg;
}

/// Provenance card attached to every command output. The digest covers the
/// command, config, inputs, and output names; timings are recorded but kept
/// out of the digest so identical runs stay byte-identical.
struct RunManifest {
    std::string command;
    Config config;
    std::vector<std::pair<std::string, std::string>> inputs;  // label -> digest/value
    std::vector<std::string> outputs;
    std::vector<std::pair<std::string, int64_t>> timings_ms;

    void add_input(std::string label, std::string value) {
        inputs.emplace_back(std::move(label), std::move(value));
    }

    std::string digest() const {
        Fnv1a64 h;
        h.update(command).update("\n");
        h.update(config_to_json(config).dump()).update("\n");
        for (const auto& [label, value] : inputs)
            h.update(label).update("=").update(value).update("\n");
        for (const auto& path : outputs) h.update(path).update("\n");
        return h.hex();
    }

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["command"] = command;
        j["digest"] = digest();
        j["config"] = config_to_json(config);
        auto in = nlohmann::ordered_json::object();
        for (const auto& [label, value] : inputs) in[label] = value;
        j["inputs"] = std::move(in);
        j["outputs"] = outputs;
        auto t = nlohmann::ordered_json::object();
        for (const auto& [label, ms] : timings_ms) t[label] = ms;
        j["timings_ms"] = std::move(t);
        return j;
    }
};

}  // namespace trailmine
