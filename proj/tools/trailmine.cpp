// trailmine: trajectory-mining toolkit CLI.
//
// Subcommands cover the whole flow: synthesize traces, ingest batches into a
// store, and run the POI / neighborhood / micro-mobility / communities
// pipelines, exporting CSV and GeoJSON. Exit codes: 0 success, 1 domain
// error, 2 I/O or format error.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "trailmine/digest.hpp"
#include "trailmine/fusion.hpp"
#include "trailmine/ingest.hpp"
#include "trailmine/manifest.hpp"
#include "trailmine/pipeline.hpp"
#include "trailmine/synth.hpp"

namespace fs = std::filesystem;
using namespace trailmine;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDomain = 1;
constexpr int kExitIo = 2;

// Optional per-field overrides; applied over the config file, which is
// applied over defaults.
struct ConfigOverrides {
    std::optional<int64_t> scan_interval_s, min_dwell_s, max_batch_hours, utc_offset_s;
    std::optional<int> min_pts_poi, ap_low_count, min_pts_micro, geo_min_pts;
    std::optional<double> eps_low, eps_high, louvain_partition_threshold,
        micromobility_eps, gps_accuracy_max_m, heatmap_cell_m, max_speed_mps,
        gps_accuracy_filter_m, stay_radius_m, geo_eps_m;
};

void add_config_flags(CLI::App* cmd, std::string& config_path, ConfigOverrides& ov) {
    cmd->add_option("--config", config_path, "Config file (JSON)");
    cmd->add_option("--scan-interval-s", ov.scan_interval_s);
    cmd->add_option("--min-dwell-s", ov.min_dwell_s);
    cmd->add_option("--min-pts-poi", ov.min_pts_poi);
    cmd->add_option("--ap-low-count", ov.ap_low_count);
    cmd->add_option("--eps-low", ov.eps_low);
    cmd->add_option("--eps-high", ov.eps_high);
    cmd->add_option("--louvain-partition-threshold", ov.louvain_partition_threshold);
    cmd->add_option("--micromobility-eps", ov.micromobility_eps);
    cmd->add_option("--min-pts-micro", ov.min_pts_micro);
    cmd->add_option("--gps-accuracy-max-m", ov.gps_accuracy_max_m);
    cmd->add_option("--heatmap-cell-m", ov.heatmap_cell_m);
    cmd->add_option("--max-speed-mps", ov.max_speed_mps);
    cmd->add_option("--gps-accuracy-filter-m", ov.gps_accuracy_filter_m);
    cmd->add_option("--stay-radius-m", ov.stay_radius_m);
    cmd->add_option("--geo-eps-m", ov.geo_eps_m);
    cmd->add_option("--geo-min-pts", ov.geo_min_pts);
    cmd->add_option("--max-batch-hours", ov.max_batch_hours);
    cmd->add_option("--utc-offset-s", ov.utc_offset_s);
}

Config resolve_config(const std::string& config_path, const ConfigOverrides& ov) {
    Config cfg;
    if (!config_path.empty()) {
        const auto j = nlohmann::json::parse(detail::read_file(config_path), nullptr, false);
        if (j.is_discarded() || !j.is_object())
            throw CorruptStream("config file is not a JSON object: " + config_path);
        cfg = config_from_json(j);
    }
    if (ov.scan_interval_s) cfg.scan_interval_s = *ov.scan_interval_s;
    if (ov.min_dwell_s) cfg.min_dwell_s = *ov.min_dwell_s;
    if (ov.min_pts_poi) cfg.min_pts_poi = *ov.min_pts_poi;
    if (ov.ap_low_count) cfg.ap_low_count = *ov.ap_low_count;
    if (ov.eps_low) cfg.eps_low = *ov.eps_low;
    if (ov.eps_high) cfg.eps_high = *ov.eps_high;
    if (ov.louvain_partition_threshold)
        cfg.louvain_partition_threshold = *ov.louvain_partition_threshold;
    if (ov.micromobility_eps) cfg.micromobility_eps = *ov.micromobility_eps;
    if (ov.min_pts_micro) cfg.min_pts_micro = *ov.min_pts_micro;
    if (ov.gps_accuracy_max_m) cfg.gps_accuracy_max_m = *ov.gps_accuracy_max_m;
    if (ov.heatmap_cell_m) cfg.heatmap_cell_m = *ov.heatmap_cell_m;
    if (ov.max_speed_mps) cfg.max_speed_mps = *ov.max_speed_mps;
    if (ov.gps_accuracy_filter_m) cfg.gps_accuracy_filter_m = *ov.gps_accuracy_filter_m;
    if (ov.stay_radius_m) cfg.stay_radius_m = *ov.stay_radius_m;
    if (ov.geo_eps_m) cfg.geo_eps_m = *ov.geo_eps_m;
    if (ov.geo_min_pts) cfg.geo_min_pts = *ov.geo_min_pts;
    if (ov.max_batch_hours) cfg.max_batch_hours = *ov.max_batch_hours;
    if (ov.utc_offset_s) cfg.utc_offset_s = *ov.utc_offset_s;
    return cfg;
}

/// Digest over a user's stored records: index plus segment bytes, so any
/// content change shows up in the manifest.
std::string store_user_digest(const Store& store, const std::string& user) {
    Fnv1a64 h;
    const auto dir = store.root() / user;
    const auto index = dir / "index.json";
    if (fs::exists(index)) h.update(detail::read_file(index));
    std::vector<std::string> segments;
    if (fs::exists(dir))
        for (const auto& entry : fs::directory_iterator(dir))
            if (entry.path().extension() == ".gz") segments.push_back(entry.path().string());
    std::sort(segments.begin(), segments.end());
    for (const auto& path : segments) h.update(detail::read_file(path));
    return h.hex();
}

TimeWindow resolve_window(std::optional<int64_t> from, std::optional<int64_t> to,
                          const ScanList& scans, const GpsTrack& track) {
    if (from && to) return {*from, *to};
    int64_t lo = INT64_MAX, hi = INT64_MIN;
    for (const auto& s : scans.scans) {
        lo = std::min(lo, s.timestamp);
        hi = std::max(hi, s.timestamp);
    }
    for (const auto& p : track.points) {
        lo = std::min(lo, p.timestamp);
        hi = std::max(hi, p.timestamp);
    }
    if (lo > hi) {
        lo = 0;
        hi = 0;
    }
    return {from.value_or(lo), to.value_or(hi)};
}

void require_user(const Store& store, const std::string& user) {
    if (!fs::exists(store.root() / user))
        throw std::invalid_argument("user '" + user + "' not found in store");
}

void write_output(const fs::path& path, std::string_view bytes) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    detail::atomic_write_file(path, bytes);
}

/// Manifests record output basenames, not full paths: the digest must not
/// change just because the same analysis was written to a different directory.
std::string output_name(const std::string& path) {
    return fs::path(path).filename().string();
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

int cmd_synth(const std::string& world_path, const std::string& scenario_path,
              uint64_t seed, const std::string& out_dir, const Config& cfg) {
    const auto wj = nlohmann::json::parse(detail::read_file(world_path), nullptr, false);
    const auto sj = nlohmann::json::parse(detail::read_file(scenario_path), nullptr, false);
    if (wj.is_discarded()) throw CorruptStream("world file is not valid JSON");
    if (sj.is_discarded()) throw CorruptStream("scenario file is not valid JSON");

    const auto world = synth::world_from_json(wj);
    const auto scenario = synth::scenario_from_json(sj);
    const auto sim = synth::simulate(world, scenario, cfg, seed);

    fs::create_directories(out_dir);
    std::size_t batch_count = 0;
    for (const auto& [user, scans] : sim.scans) {
        const auto batches = synth::emit_batches(user, scans, sim.tracks.at(user), cfg);
        for (std::size_t i = 0; i < batches.size(); ++i) {
            char name[96];
            std::snprintf(name, sizeof(name), "%s-%04zu%s", user.c_str(), i + 1,
                          kTraceExtension);
            write_output(fs::path(out_dir) / name, encode_batch(batches[i]));
            ++batch_count;
        }
    }
    write_output(fs::path(out_dir) / "truth.json", synth::truth_to_json(sim).dump(2) + "\n");
    std::cout << "synth: " << sim.scans.size() << " user(s), " << batch_count
              << " batch(es) -> " << out_dir << "\n";
    return kExitOk;
}

int cmd_ingest(const std::vector<std::string>& paths, const std::string& store_dir,
               bool tolerate_rejects) {
    Store store{store_dir};
    std::size_t total_accepted = 0, total_duplicates = 0, total_rejects = 0;
    for (const auto& path : paths) {
        const auto report = store.ingest_batch(detail::read_file(path));
        total_accepted += report.accepted;
        total_duplicates += report.duplicates;
        total_rejects += report.rejects.size();
        std::cout << path << ": user " << report.user_id << ", " << report.accepted
                  << " new records, " << report.duplicates << " duplicates, "
                  << report.rejects.size() << " rejects\n";
        for (const auto& reject : report.rejects)
            std::cerr << path << ":" << reject.line_no << ": rejected: "
                      << reject.message << "\n";
    }
    std::cout << "ingest total: " << total_accepted << " new records, "
              << total_duplicates << " duplicates, " << total_rejects << " rejects\n";
    if (total_rejects > 0 && !tolerate_rejects) return kExitDomain;
    return kExitOk;
}

int cmd_poi(const std::string& store_dir, const std::string& user,
            std::optional<int64_t> from, std::optional<int64_t> to,
            const std::string& out_csv, const std::string& out_geojson,
            const Config& cfg) {
    Store store{store_dir};
    require_user(store, user);
    const auto [scans, track] = store.read_user(user);
    const TimeWindow window = resolve_window(from, to, scans, track);

    const auto result = pipeline::run_poi(scans, track, window, cfg);

    RunManifest manifest;
    manifest.command = "poi";
    manifest.config = cfg;
    manifest.add_input("user", user);
    manifest.add_input("store", store_user_digest(store, user));
    manifest.add_input("window", std::to_string(window.start) + ".." +
                                     std::to_string(window.end));
    if (!out_csv.empty()) manifest.outputs.push_back(output_name(out_csv));
    if (!out_geojson.empty()) manifest.outputs.push_back(output_name(out_geojson));
    const std::string digest = manifest.digest();

    if (!out_csv.empty()) write_output(out_csv, pipeline::poi_csv(result, cfg, digest));
    if (!out_geojson.empty())
        write_output(out_geojson, pipeline::poi_geojson(result, digest));
    std::cout << "poi: user " << user << ", " << result.run.clusters.size()
              << " POI(s), " << result.rows.size() << " visit(s), manifest " << digest
              << "\n";
    return kExitOk;
}

int cmd_neighborhood(const std::string& store_dir, const std::string& user,
                     std::optional<int64_t> from, std::optional<int64_t> to,
                     const std::string& out_geojson, const Config& cfg) {
    Store store{store_dir};
    require_user(store, user);
    const auto [scans, track] = store.read_user(user);
    const TimeWindow window = resolve_window(from, to, scans, track);

    const auto result = pipeline::run_neighborhood(scans, track, window, cfg);

    RunManifest manifest;
    manifest.command = "neighborhood";
    manifest.config = cfg;
    manifest.add_input("user", user);
    manifest.add_input("store", store_user_digest(store, user));
    manifest.add_input("window", std::to_string(window.start) + ".." +
                                     std::to_string(window.end));
    if (!out_geojson.empty()) manifest.outputs.push_back(output_name(out_geojson));
    const std::string digest = manifest.digest();

    if (!out_geojson.empty())
        write_output(out_geojson, pipeline::neighborhood_geojson(result, digest));
    std::cout << "neighborhood: user " << user << ", "
              << result.report.neighborhood_pois.size() << " neighborhood POI(s), "
              << result.report.moving_points_total << " moving point(s), manifest "
              << digest << "\n";
    return kExitOk;
}

int cmd_micro(const std::string& store_dir, const std::vector<std::string>& users,
              std::optional<int64_t> from, std::optional<int64_t> to,
              const std::vector<double>& eps_values, const std::string& out_geojson,
              const std::string& out_sweep_csv, const Config& cfg) {
    Store store{store_dir};
    std::vector<pipeline::MicroResult> results;

    RunManifest manifest;
    manifest.command = "micro";
    manifest.config = cfg;

    for (const auto& user : users) {
        require_user(store, user);
        const auto [scans, track] = store.read_user(user);
        const TimeWindow window = resolve_window(from, to, scans, track);
        results.push_back(pipeline::run_micro(scans, track, window, eps_values, cfg));
        manifest.add_input("user:" + user, store_user_digest(store, user));
        manifest.add_input("window:" + user, std::to_string(window.start) + ".." +
                                                 std::to_string(window.end));
    }
    std::string eps_text;
    for (const double eps : eps_values) {
        if (!eps_text.empty()) eps_text += ",";
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.6g", eps);
        eps_text += buf;
    }
    manifest.add_input("eps", eps_text);
    if (!out_geojson.empty()) manifest.outputs.push_back(output_name(out_geojson));
    if (!out_sweep_csv.empty()) manifest.outputs.push_back(output_name(out_sweep_csv));
    const std::string digest = manifest.digest();

    if (!out_geojson.empty())
        write_output(out_geojson, pipeline::micro_geojson(results, digest));
    if (!out_sweep_csv.empty())
        write_output(out_sweep_csv, pipeline::micro_sweep_csv(results, digest));

    std::size_t clusters = 0;
    for (const auto& r : results) clusters += r.clusters.size();
    std::cout << "micro: " << users.size() << " user(s), " << clusters
              << " path cluster(s), manifest " << digest << "\n";
    return kExitOk;
}

int cmd_communities(const std::string& store_dir, std::vector<std::string> users,
                    std::optional<int64_t> from, std::optional<int64_t> to,
                    double threshold, const std::string& center_text, double radius_m,
                    const std::string& out_csv, const Config& cfg) {
    Store store{store_dir};
    if (users.empty()) users = store.users();
    if (users.empty()) throw std::invalid_argument("store has no users");

    std::optional<pipeline::RegionFilter> region;
    if (!center_text.empty()) {
        double lat = 0.0, lon = 0.0;
        if (std::sscanf(center_text.c_str(), "%lf,%lf", &lat, &lon) != 2)
            throw std::invalid_argument("--center expects \"lat,lon\"");
        region = pipeline::RegionFilter{{lat, lon}, radius_m};
    }

    RunManifest manifest;
    manifest.command = "communities";
    manifest.config = cfg;

    std::vector<pipeline::PoiResult> per_user;
    for (const auto& user : users) {
        require_user(store, user);
        const auto [scans, track] = store.read_user(user);
        const TimeWindow window = resolve_window(from, to, scans, track);
        per_user.push_back(pipeline::run_poi(scans, track, window, cfg));
        manifest.add_input("user:" + user, store_user_digest(store, user));
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", threshold);
    manifest.add_input("threshold", buf);
    if (!out_csv.empty()) manifest.outputs.push_back(output_name(out_csv));
    const std::string digest = manifest.digest();

    const auto result = pipeline::run_communities(per_user, region, threshold);
    if (!out_csv.empty())
        write_output(out_csv, pipeline::communities_csv(result, digest));

    std::map<int, std::size_t> sizes;
    for (const auto& row : result.rows) ++sizes[row.community];
    std::cout << "communities: " << result.graph.nodes.size() << " POI(s), "
              << sizes.size() << " communit" << (sizes.size() == 1 ? "y" : "ies")
              << ", modularity " << result.partition.modularity << ", manifest "
              << digest << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"trajectory-mining toolkit: POIs, neighborhood activity, and "
                 "micro-mobility paths from fused GPS + WiFi traces"};
    app.require_subcommand(1);

    std::string config_path;
    ConfigOverrides overrides;

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "Generate traces from a world + scenario");
    std::string world_path, scenario_path, synth_out;
    uint64_t seed = 1;
    synth_cmd->add_option("--world", world_path, "World file (JSON)")->required();
    synth_cmd->add_option("--scenario", scenario_path, "Scenario file (JSON)")->required();
    synth_cmd->add_option("--seed", seed, "RNG seed");
    synth_cmd->add_option("--out", synth_out, "Output directory")->required();
    add_config_flags(synth_cmd, config_path, overrides);

    // ingest
    auto* ingest_cmd = app.add_subcommand("ingest", "Ingest batch files into a store");
    std::vector<std::string> ingest_paths;
    std::string store_dir;
    bool tolerate_rejects = false;
    ingest_cmd->add_option("paths", ingest_paths, "Batch files (.mtrace.gz)")->required();
    ingest_cmd->add_option("--store", store_dir, "Store directory")->required();
    ingest_cmd->add_flag("--tolerate-rejects", tolerate_rejects,
                         "Exit 0 even when records were rejected");

    // poi
    auto* poi_cmd = app.add_subcommand("poi", "Extract POIs and visit table for one user");
    std::string user;
    std::optional<int64_t> from, to;
    std::string out_csv, out_geojson;
    poi_cmd->add_option("--store", store_dir, "Store directory")->required();
    poi_cmd->add_option("--user", user, "User id")->required();
    poi_cmd->add_option("--from", from, "Window start (epoch seconds)");
    poi_cmd->add_option("--to", to, "Window end (epoch seconds)");
    poi_cmd->add_option("--out-csv", out_csv, "Visit table output");
    poi_cmd->add_option("--out-geojson", out_geojson, "POI points output");
    add_config_flags(poi_cmd, config_path, overrides);

    // neighborhood
    auto* nbh_cmd = app.add_subcommand("neighborhood",
                                       "Fused home-region places and moving heatmap");
    nbh_cmd->add_option("--store", store_dir, "Store directory")->required();
    nbh_cmd->add_option("--user", user, "User id")->required();
    nbh_cmd->add_option("--from", from, "Window start (epoch seconds)");
    nbh_cmd->add_option("--to", to, "Window end (epoch seconds)");
    nbh_cmd->add_option("--out-geojson", out_geojson, "Report output")->required();
    add_config_flags(nbh_cmd, config_path, overrides);

    // micro
    auto* micro_cmd = app.add_subcommand("micro", "Simplify travel paths between stays");
    std::vector<std::string> micro_users;
    std::vector<double> eps_values{0.2, 0.25, 0.3, 0.4};
    std::string out_sweep;
    micro_cmd->add_option("--store", store_dir, "Store directory")->required();
    micro_cmd->add_option("--user", micro_users, "User id (repeatable)")->required();
    micro_cmd->add_option("--from", from, "Window start (epoch seconds)");
    micro_cmd->add_option("--to", to, "Window end (epoch seconds)");
    micro_cmd->add_option("--eps", eps_values, "Threshold sweep values");
    micro_cmd->add_option("--out-geojson", out_geojson, "Simplified paths output");
    micro_cmd->add_option("--out-sweep-csv", out_sweep, "Sweep table output");
    add_config_flags(micro_cmd, config_path, overrides);

    // communities
    auto* comm_cmd = app.add_subcommand("communities",
                                        "Cross-user POI communities by fingerprint");
    std::vector<std::string> comm_users;
    double threshold = 0.5;
    std::string center_text;
    double radius_m = 500.0;
    comm_cmd->add_option("--store", store_dir, "Store directory")->required();
    comm_cmd->add_option("--user", comm_users, "User id (repeatable; default all)");
    comm_cmd->add_option("--from", from, "Window start (epoch seconds)");
    comm_cmd->add_option("--to", to, "Window end (epoch seconds)");
    comm_cmd->add_option("--threshold", threshold, "Partitioning threshold");
    comm_cmd->add_option("--center", center_text, "Region filter center \"lat,lon\"");
    comm_cmd->add_option("--radius", radius_m, "Region filter radius (m)");
    comm_cmd->add_option("--out-csv", out_csv, "Membership table output");
    add_config_flags(comm_cmd, config_path, overrides);

    CLI11_PARSE(app, argc, argv);

    try {
        const Config cfg = resolve_config(config_path, overrides);
        if (synth_cmd->parsed())
            return cmd_synth(world_path, scenario_path, seed, synth_out, cfg);
        if (ingest_cmd->parsed())
            return cmd_ingest(ingest_paths, store_dir, tolerate_rejects);
        if (poi_cmd->parsed())
            return cmd_poi(store_dir, user, from, to, out_csv, out_geojson, cfg);
        if (nbh_cmd->parsed())
            return cmd_neighborhood(store_dir, user, from, to, out_geojson, cfg);
        if (micro_cmd->parsed())
            return cmd_micro(store_dir, micro_users, from, to, eps_values, out_geojson,
                             out_sweep, cfg);
        if (comm_cmd->parsed())
            return cmd_communities(store_dir, comm_users, from, to, threshold,
                                   center_text, radius_m, out_csv, cfg);
    } catch (const CorruptStream& e) {
        std::cerr << "error: CorruptStream: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDomain;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDomain;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
    return kExitOk;
}
