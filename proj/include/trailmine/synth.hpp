#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "trailmine/digest.hpp"
#include "trailmine/geo.hpp"
#include "trailmine/ingest.hpp"
#include "trailmine/model.hpp"

namespace trailmine::synth {

// ---------------------------------------------------------------------------
// World and scenario
// ---------------------------------------------------------------------------

struct ApSite {
    Mac mac;
    LatLon pos;
    int floor = 0;
    double tx_power_dbm = -40.0;  // received power at 1 m
};

struct Place {
    std::string label;
    LatLon pos;
    double radius_m = 3.0;
    int floor = 0;
    bool sheltered = true;  // degrades GPS while the agent stays here
};

struct Walkway {
    std::string label;
    std::vector<LatLon> waypoints;
};

struct World {
    std::vector<ApSite> aps;
    std::vector<Place> places;
    std::vector<Walkway> walkways;

    const Place& place(const std::string& label) const {
        for (const auto& p : places)
            if (p.label == label) return p;
        throw std::invalid_argument("unknown place '" + label + "'");
    }
    const Walkway& walkway(const std::string& label) const {
        for (const auto& w : walkways)
            if (w.label == label) return w;
        throw std::invalid_argument("unknown walkway '" + label + "'");
    }
};

/// One schedule entry: either a dwell at a place or a constant-speed transit
/// along a walkway.
struct Event {
    enum class Kind { stay, transit };
    Kind kind = Kind::stay;
    std::string target;  // place or walkway label
    int64_t start = 0;
    int64_t end = 0;
};

struct AgentSchedule {
    std::string user_id;
    std::vector<Event> events;
};

struct NoiseModel {
    double rss_sigma_dbm = 2.0;
    double path_loss_exponent = 3.0;
    double floor_attenuation_db = 20.0;
    double detection_floor_dbm = -95.0;
    double gps_outdoor_accuracy_min_m = 4.0;
    double gps_outdoor_accuracy_max_m = 12.0;
    double gps_sheltered_accuracy_min_m = 28.0;
    double gps_sheltered_accuracy_max_m = 48.0;
};

struct Scenario {
    std::vector<AgentSchedule> agents;
    NoiseModel noise;
};

// ---------------------------------------------------------------------------
// Ground truth
// ---------------------------------------------------------------------------

/// Label attached to every emitted scan: the place the agent was dwelling at,
/// or the walkway it was traversing. Together they partition the scan list.
struct ScanLabel {
    bool in_transit = false;
    std::string label;

    bool operator==(const ScanLabel&) const = default;
};

struct UserTruth {
    std::string home_place;          // label with the largest total dwell
    std::vector<Event> events;       // the realized schedule
    std::vector<ScanLabel> scan_labels;  // aligned with the emitted ScanList
};

struct SimResult {
    std::map<std::string, GpsTrack> tracks;
    std::map<std::string, ScanList> scans;
    std::map<std::string, UserTruth> truth;
};

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

namespace detail {

inline LatLon point_along(const std::vector<LatLon>& waypoints, double fraction) {
    if (waypoints.empty()) throw std::invalid_argument("walkway has no waypoints");
    if (waypoints.size() == 1) return waypoints.front();

    std::vector<double> leg(waypoints.size() - 1);
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < waypoints.size(); ++i) {
        leg[i] = haversine_m(waypoints[i], waypoints[i + 1]);
        total += leg[i];
    }
    if (total == 0.0) return waypoints.front();

    double want = std::clamp(fraction, 0.0, 1.0) * total;
    for (std::size_t i = 0; i < leg.size(); ++i) {
        if (want <= leg[i] || i + 1 == leg.size()) {
            const double f = leg[i] == 0.0 ? 0.0 : want / leg[i];
            const auto& a = waypoints[i];
            const auto& b = waypoints[i + 1];
            return {a.lat + (b.lat - a.lat) * f, a.lon + (b.lon - a.lon) * f};
        }
        want -= leg[i];
    }
    return waypoints.back();
}

inline void validate(const World& world, const Scenario& scenario) {
    std::map<uint64_t, int> macs;
    for (const auto& ap : world.aps)
        if (++macs[ap.mac.bits()] > 1)
            throw std::invalid_argument("duplicate AP mac " + ap.mac.to_string());
    for (const auto& agent : scenario.agents) {
        int64_t last_end = INT64_MIN;
        for (const auto& e : agent.events) {
            if (e.end <= e.start)
                throw std::invalid_argument("schedule event with empty interval");
            if (e.start < last_end)
                throw std::invalid_argument("overlapping schedule for " + agent.user_id);
            last_end = e.end;
            if (e.kind == Event::Kind::stay)
                (void)world.place(e.target);
            else
                (void)world.walkway(e.target);
        }
    }
}

}  // namespace detail

/// Runs one deterministic simulation. Every sample tick during an event emits
/// one GPS fix and one WiFi scan; RSS follows log-distance path loss with
/// Gaussian jitter and a detection floor, and GPS quality degrades while the
/// agent is sheltered.
inline SimResult simulate(const World& world, const Scenario& scenario,
                          const Config& cfg, uint64_t seed) {
    detail::validate(world, scenario);
    SimResult result;

    for (const auto& agent : scenario.agents) {
        std::mt19937_64 rng(seed ^ fnv1a_64(agent.user_id));
        std::normal_distribution<double> rss_jitter(0.0, scenario.noise.rss_sigma_dbm);
        std::normal_distribution<double> unit_normal(0.0, 1.0);

        GpsTrack track;
        track.user_id = agent.user_id;
        ScanList scans;
        scans.user_id = agent.user_id;
        UserTruth truth;
        truth.events = agent.events;

        std::map<std::string, int64_t> dwell_per_place;

        for (const auto& event : agent.events) {
            const bool in_transit = event.kind == Event::Kind::transit;
            const Place* place = in_transit ? nullptr : &world.place(event.target);
            const Walkway* way = in_transit ? &world.walkway(event.target) : nullptr;
            if (!in_transit)
                dwell_per_place[event.target] += event.end - event.start;

            for (int64_t t = event.start; t < event.end; t += cfg.scan_interval_s) {
                LatLon pos;
                int floor = 0;
                bool sheltered;
                if (in_transit) {
                    const double frac = static_cast<double>(t - event.start) /
                                        static_cast<double>(event.end - event.start);
                    pos = detail::point_along(way->waypoints, frac);
                    sheltered = false;
                } else {
                    const double r =
                        place->radius_m * std::sqrt(std::uniform_real_distribution<double>(
                                              0.0, 1.0)(rng));
                    const double theta = std::uniform_real_distribution<double>(
                        0.0, 2.0 * 3.14159265358979323846)(rng);
                    pos = offset_m(place->pos, r * std::cos(theta), r * std::sin(theta));
                    floor = place->floor;
                    sheltered = place->sheltered;
                }

                // WiFi scan
                ScanResult scan;
                scan.timestamp = t;
                for (const auto& ap : world.aps) {
                    const double d = std::max(1.0, haversine_m(pos, ap.pos));
                    const int floors_crossed = std::abs(ap.floor - floor);
                    double rss = ap.tx_power_dbm -
                                 10.0 * scenario.noise.path_loss_exponent * std::log10(d) -
                                 floors_crossed * scenario.noise.floor_attenuation_db +
                                 rss_jitter(rng);
                    if (rss < scenario.noise.detection_floor_dbm) continue;
                    scan.observations[ap.mac] =
                        static_cast<int>(std::lround(std::clamp(rss, -120.0, -1.0)));
                }
                if (!scan.observations.empty()) {
                    scans.scans.push_back(std::move(scan));
                    truth.scan_labels.push_back({in_transit, event.target});
                }

                // GPS fix
                const auto& noise = scenario.noise;
                const double acc_lo = sheltered ? noise.gps_sheltered_accuracy_min_m
                                                : noise.gps_outdoor_accuracy_min_m;
                const double acc_hi = sheltered ? noise.gps_sheltered_accuracy_max_m
                                                : noise.gps_outdoor_accuracy_max_m;
                const double accuracy =
                    std::uniform_real_distribution<double>(acc_lo, acc_hi)(rng);
                const double scatter = accuracy / 2.0;
                const LatLon fix_pos = offset_m(pos, scatter * unit_normal(rng),
                                                scatter * unit_normal(rng));
                GpsPoint fix;
                fix.timestamp = t;
                fix.latitude = fix_pos.lat;
                fix.longitude = fix_pos.lon;
                fix.accuracy = accuracy;
                track.points.push_back(fix);
            }
        }

        int64_t best_dwell = -1;
        for (const auto& [label, dwell] : dwell_per_place) {
            if (dwell > best_dwell) {
                best_dwell = dwell;
                truth.home_place = label;
            }
        }

        result.tracks.emplace(agent.user_id, std::move(track));
        result.scans.emplace(agent.user_id, std::move(scans));
        result.truth.emplace(agent.user_id, std::move(truth));
    }
    return result;
}

/// Splits one user's simulated output into upload batches of at most
/// max_batch_hours, aligned to the first sample.
inline std::vector<Batch> emit_batches(const std::string& user_id,
                                       const ScanList& scans, const GpsTrack& track,
                                       const Config& cfg) {
    std::vector<Batch> batches;
    int64_t first = INT64_MAX, last = INT64_MIN;
    for (const auto& s : scans.scans) {
        first = std::min(first, s.timestamp);
        last = std::max(last, s.timestamp);
    }
    for (const auto& p : track.points) {
        first = std::min(first, p.timestamp);
        last = std::max(last, p.timestamp);
    }
    if (first > last) return batches;

    const int64_t span = cfg.max_batch_hours * 3600;
    for (int64_t start = first; start <= last; start += span) {
        Batch b;
        b.user_id = user_id;
        b.start = start;
        b.end = std::min(start + span - 1, last);
        for (const auto& s : scans.scans)
            if (s.timestamp >= b.start && s.timestamp <= b.end) b.scans.push_back(s);
        for (const auto& p : track.points)
            if (p.timestamp >= b.start && p.timestamp <= b.end) b.fixes.push_back(p);
        batches.push_back(std::move(b));
    }
    return batches;
}

// ---------------------------------------------------------------------------
// Declarative world/scenario files
// ---------------------------------------------------------------------------

inline nlohmann::ordered_json to_json(const World& w) {
    nlohmann::ordered_json j;
    j["aps"] = nlohmann::ordered_json::array();
    for (const auto& ap : w.aps)
        j["aps"].push_back({{"mac", ap.mac.to_string()},
                            {"lat", ap.pos.lat},
                            {"lon", ap.pos.lon},
                            {"floor", ap.floor},
                            {"tx_power", ap.tx_power_dbm}});
    j["places"] = nlohmann::ordered_json::array();
    for (const auto& p : w.places)
        j["places"].push_back({{"label", p.label},
                               {"lat", p.pos.lat},
                               {"lon", p.pos.lon},
                               {"radius_m", p.radius_m},
                               {"floor", p.floor},
                               {"sheltered", p.sheltered}});
    j["walkways"] = nlohmann::ordered_json::array();
    for (const auto& w2 : w.walkways) {
        auto pts = nlohmann::ordered_json::array();
        for (const auto& pt : w2.waypoints) pts.push_back({pt.lat, pt.lon});
        j["walkways"].push_back({{"label", w2.label}, {"points", std::move(pts)}});
    }
    return j;
}

inline World world_from_json(const nlohmann::json& j) {
    World w;
    for (const auto& a : j.value("aps", nlohmann::json::array())) {
        ApSite ap;
        const auto mac = Mac::parse(a.at("mac").get<std::string>());
        if (!mac) throw std::invalid_argument("bad mac in world file");
        ap.mac = *mac;
        ap.pos = {a.at("lat").get<double>(), a.at("lon").get<double>()};
        ap.floor = a.value("floor", 0);
        ap.tx_power_dbm = a.value("tx_power", -40.0);
        w.aps.push_back(ap);
    }
    for (const auto& p : j.value("places", nlohmann::json::array())) {
        Place pl;
        pl.label = p.at("label").get<std::string>();
        pl.pos = {p.at("lat").get<double>(), p.at("lon").get<double>()};
        pl.radius_m = p.value("radius_m", 3.0);
        pl.floor = p.value("floor", 0);
        pl.sheltered = p.value("sheltered", true);
        w.places.push_back(pl);
    }
    for (const auto& wj : j.value("walkways", nlohmann::json::array())) {
        Walkway way;
        way.label = wj.at("label").get<std::string>();
        for (const auto& pt : wj.at("points"))
            way.waypoints.push_back({pt.at(0).get<double>(), pt.at(1).get<double>()});
        w.walkways.push_back(std::move(way));
    }
    return w;
}

inline nlohmann::ordered_json to_json(const Scenario& s) {
    nlohmann::ordered_json j;
    j["noise"] = {{"rss_sigma_dbm", s.noise.rss_sigma_dbm},
                  {"path_loss_exponent", s.noise.path_loss_exponent},
                  {"floor_attenuation_db", s.noise.floor_attenuation_db},
                  {"detection_floor_dbm", s.noise.detection_floor_dbm},
                  {"gps_outdoor_accuracy_min_m", s.noise.gps_outdoor_accuracy_min_m},
                  {"gps_outdoor_accuracy_max_m", s.noise.gps_outdoor_accuracy_max_m},
                  {"gps_sheltered_accuracy_min_m", s.noise.gps_sheltered_accuracy_min_m},
                  {"gps_sheltered_accuracy_max_m", s.noise.gps_sheltered_accuracy_max_m}};
    j["agents"] = nlohmann::ordered_json::array();
    for (const auto& agent : s.agents) {
        auto events = nlohmann::ordered_json::array();
        for (const auto& e : agent.events)
            events.push_back({{"kind", e.kind == Event::Kind::stay ? "stay" : "transit"},
                              {"target", e.target},
                              {"start", e.start},
                              {"end", e.end}});
        j["agents"].push_back({{"user", agent.user_id}, {"events", std::move(events)}});
    }
    return j;
}

inline Scenario scenario_from_json(const nlohmann::json& j) {
    Scenario s;
    if (j.contains("noise")) {
        const auto& n = j.at("noise");
        s.noise.rss_sigma_dbm = n.value("rss_sigma_dbm", s.noise.rss_sigma_dbm);
        s.noise.path_loss_exponent =
            n.value("path_loss_exponent", s.noise.path_loss_exponent);
        s.noise.floor_attenuation_db =
            n.value("floor_attenuation_db", s.noise.floor_attenuation_db);
        s.noise.detection_floor_dbm =
            n.value("detection_floor_dbm", s.noise.detection_floor_dbm);
        s.noise.gps_outdoor_accuracy_min_m =
            n.value("gps_outdoor_accuracy_min_m", s.noise.gps_outdoor_accuracy_min_m);
        s.noise.gps_outdoor_accuracy_max_m =
            n.value("gps_outdoor_accuracy_max_m", s.noise.gps_outdoor_accuracy_max_m);
        s.noise.gps_sheltered_accuracy_min_m =
            n.value("gps_sheltered_accuracy_min_m", s.noise.gps_sheltered_accuracy_min_m);
        s.noise.gps_sheltered_accuracy_max_m =
            n.value("gps_sheltered_accuracy_max_m", s.noise.gps_sheltered_accuracy_max_m);
    }
    for (const auto& a : j.value("agents", nlohmann::json::array())) {
        AgentSchedule agent;
        agent.user_id = a.at("user").get<std::string>();
        for (const auto& e : a.value("events", nlohmann::json::array())) {
            Event ev;
            ev.kind = e.at("kind").get<std::string>() == "transit" ? Event::Kind::transit
                                                                   : Event::Kind::stay;
            ev.target = e.at("target").get<std::string>();
            ev.start = e.at("start").get<int64_t>();
            ev.end = e.at("end").get<int64_t>();
            agent.events.push_back(std::move(ev));
        }
        s.agents.push_back(std::move(agent));
    }
    return s;
}

inline nlohmann::ordered_json truth_to_json(const SimResult& r) {
    nlohmann::ordered_json j;
    for (const auto& [user, truth] : r.truth) {
        nlohmann::ordered_json u;
        u["home"] = truth.home_place;
        u["events"] = nlohmann::ordered_json::array();
        for (const auto& e : truth.events)
            u["events"].push_back(
                {{"kind", e.kind == Event::Kind::stay ? "stay" : "transit"},
                 {"target", e.target},
                 {"start", e.start},
                 {"end", e.end}});
        u["scan_labels"] = nlohmann::ordered_json::array();
        for (const auto& lbl : truth.scan_labels)
            u["scan_labels"].push_back(
                {{"in_transit", lbl.in_transit}, {"label", lbl.label}});
        j[user] = std::move(u);
    }
    return j;
}

}  // namespace trailmine::synth
