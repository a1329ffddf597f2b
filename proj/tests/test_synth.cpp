#include <catch2/catch_amalgamated.hpp>

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "support/scenarios.hpp"
#include "trailmine/geo.hpp"
#include "trailmine/ingest.hpp"
#include "trailmine/similarity.hpp"
#include "trailmine/synth.hpp"

using namespace trailmine;
using namespace trailmine::synth;
using scenarios::kBase;
using scenarios::kT0;

namespace {

// One outdoor spot ringed by APs, plus an optional far twin. Distances of
// kilometres put the twin's APs far under the detection floor.
World two_isolated_spots() {
    World w;
    w.places.push_back({"near", kBase, 1.0, 0, false});
    w.places.push_back({"far", offset_m(kBase, 0.0, 2000.0), 1.0, 0, false});
    for (int i = 0; i < 5; ++i) {
        const double theta = 2.0 * M_PI * i / 5;
        w.aps.push_back({scenarios::mac(100 + i),
                         offset_m(kBase, 3.0 * std::cos(theta), 3.0 * std::sin(theta)),
                         0, -40.0});
        w.aps.push_back({scenarios::mac(200 + i),
                         offset_m(w.places[1].pos, 3.0 * std::cos(theta),
                                  3.0 * std::sin(theta)),
                         0, -40.0});
    }
    return w;
}

Scenario single_agent(std::vector<Event> events) {
    Scenario s;
    s.agents.push_back({"agent", std::move(events)});
    return s;
}

}  // namespace

TEST_CASE("simulation is reproducible for a seed", "[synth]") {
    const auto setup = scenarios::split_level_home();
    const Config cfg;

    const SimResult a = simulate(setup.world, setup.scenario, cfg, 99);
    const SimResult b = simulate(setup.world, setup.scenario, cfg, 99);

    REQUIRE(a.scans.count(setup.user) == 1);
    CHECK(a.scans.at(setup.user).scans == b.scans.at(setup.user).scans);
    CHECK(a.tracks.at(setup.user).points == b.tracks.at(setup.user).points);
    CHECK(a.truth.at(setup.user).home_place == b.truth.at(setup.user).home_place);
    CHECK(a.truth.at(setup.user).scan_labels == b.truth.at(setup.user).scan_labels);

    const SimResult c = simulate(setup.world, setup.scenario, cfg, 100);
    CHECK(a.tracks.at(setup.user).points != c.tracks.at(setup.user).points);
}

TEST_CASE("an hour parked at one spot yields near-identical scans", "[synth]") {
    const World w = two_isolated_spots();
    const Scenario s =
        single_agent({{Event::Kind::stay, "near", kT0, kT0 + 3600}});
    const Config cfg;

    const SimResult r = simulate(w, s, cfg, 7);
    const auto& scans = r.scans.at("agent").scans;
    REQUIRE(scans.size() == 12);

    for (const auto& scan : scans) CHECK(scan.ap_count() == 5);
    for (std::size_t i = 0; i < scans.size(); ++i) {
        for (std::size_t j = i + 1; j < scans.size(); ++j) {
            const double sim = cosine_similarity(Fingerprint::from_scan(scans[i]),
                                                 Fingerprint::from_scan(scans[j]))
                                   .value;
            CHECK(sim >= 0.9);
        }
    }
}

TEST_CASE("distant spots share no access points", "[synth]") {
    const World w = two_isolated_spots();
    const Scenario s = single_agent({{Event::Kind::stay, "near", kT0, kT0 + 1800},
                                     {Event::Kind::stay, "far", kT0 + 1800, kT0 + 3600}});
    const Config cfg;

    const SimResult r = simulate(w, s, cfg, 13);
    const auto& scans = r.scans.at("agent").scans;
    const auto& labels = r.truth.at("agent").scan_labels;
    REQUIRE(scans.size() == labels.size());
    REQUIRE(scans.size() == 12);

    for (std::size_t i = 0; i < scans.size(); ++i) {
        for (std::size_t j = i + 1; j < scans.size(); ++j) {
            if (labels[i].label == labels[j].label) continue;
            CHECK(cosine_similarity(Fingerprint::from_scan(scans[i]),
                                    Fingerprint::from_scan(scans[j]))
                      .value == 0.0);
        }
    }
}

TEST_CASE("invalid worlds and schedules are refused", "[synth]") {
    const Config cfg;

    SECTION("overlapping events") {
        const Scenario s =
            single_agent({{Event::Kind::stay, "near", kT0, kT0 + 3600},
                          {Event::Kind::stay, "far", kT0 + 3000, kT0 + 7200}});
        CHECK_THROWS_AS(simulate(two_isolated_spots(), s, cfg, 1),
                        std::invalid_argument);
    }
    SECTION("empty event interval") {
        const Scenario s = single_agent({{Event::Kind::stay, "near", kT0, kT0}});
        CHECK_THROWS_AS(simulate(two_isolated_spots(), s, cfg, 1),
                        std::invalid_argument);
    }
    SECTION("unknown target label") {
        const Scenario s =
            single_agent({{Event::Kind::stay, "nowhere", kT0, kT0 + 600}});
        CHECK_THROWS_AS(simulate(two_isolated_spots(), s, cfg, 1),
                        std::invalid_argument);
    }
    SECTION("duplicate AP mac") {
        World w = two_isolated_spots();
        w.aps.push_back(w.aps.front());
        const Scenario s =
            single_agent({{Event::Kind::stay, "near", kT0, kT0 + 600}});
        CHECK_THROWS_AS(simulate(w, s, cfg, 1), std::invalid_argument);
    }
}

TEST_CASE("scan labels mirror the schedule", "[synth]") {
    World w;
    w.places.push_back({"a", kBase, 1.0, 0, true});
    w.places.push_back({"b", offset_m(kBase, 0.0, 600.0), 1.0, 0, false});
    w.walkways.push_back({"w", {kBase, offset_m(kBase, 0.0, 600.0)}});
    for (int i = 0; i < 3; ++i)
        w.aps.push_back({scenarios::mac(300 + i), offset_m(kBase, 3.0 + i, 0.0), 0, -40.0});

    Scenario s = single_agent({{Event::Kind::stay, "a", kT0, kT0 + 1800},
                               {Event::Kind::transit, "w", kT0 + 1800, kT0 + 3600},
                               {Event::Kind::stay, "b", kT0 + 3600, kT0 + 5700}});
    // Hear everything everywhere so every tick emits a scan.
    s.noise.detection_floor_dbm = -200.0;

    const Config cfg;
    const SimResult r = simulate(w, s, cfg, 3);
    const auto& labels = r.truth.at("agent").scan_labels;
    const auto& scans = r.scans.at("agent").scans;
    const auto& fixes = r.tracks.at("agent").points;

    REQUIRE(scans.size() == 19);
    REQUIRE(labels.size() == 19);
    REQUIRE(fixes.size() == 19);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int64_t t = scans[i].timestamp;
        if (t < kT0 + 1800) {
            CHECK(labels[i] == ScanLabel{false, "a"});
        } else if (t < kT0 + 3600) {
            CHECK(labels[i] == ScanLabel{true, "w"});
        } else {
            CHECK(labels[i] == ScanLabel{false, "b"});
        }
    }

    SECTION("home is the place with the most dwell") {
        CHECK(r.truth.at("agent").home_place == "b");
    }

    SECTION("fix accuracy tracks shelter") {
        for (const auto& fix : fixes) {
            if (fix.timestamp < kT0 + 1800) {
                CHECK(fix.accuracy >= 28.0);
                CHECK(fix.accuracy <= 48.0);
            } else {
                CHECK(fix.accuracy >= 4.0);
                CHECK(fix.accuracy <= 12.0);
            }
        }
    }

    SECTION("realized events are echoed into the truth") {
        CHECK(r.truth.at("agent").events.size() == 3);
    }
}

TEST_CASE("repeat visits accumulate dwell for the home pick", "[synth]") {
    const World w = two_isolated_spots();
    const Scenario s = single_agent({{Event::Kind::stay, "near", kT0, kT0 + 1800},
                                     {Event::Kind::stay, "far", kT0 + 1800, kT0 + 3900},
                                     {Event::Kind::stay, "near", kT0 + 3900, kT0 + 5700}});
    const SimResult r = simulate(w, s, Config{}, 17);
    CHECK(r.truth.at("agent").home_place == "near");
}

TEST_CASE("walkway interpolation is linear in distance", "[synth]") {
    const std::vector<LatLon> way{kBase, offset_m(kBase, 1000.0, 0.0)};
    const LatLon quarter = synth::detail::point_along(way, 0.25);
    CHECK(haversine_m(kBase, quarter) == Catch::Approx(250.0).margin(1.0));
    const LatLon clamped = synth::detail::point_along(way, 1.5);
    CHECK(haversine_m(kBase, clamped) == Catch::Approx(1000.0).margin(1.0));
    CHECK_THROWS_AS(synth::detail::point_along({}, 0.5), std::invalid_argument);
}

TEST_CASE("batches split on the configured span", "[synth]") {
    Config cfg;  // six-hour default
    ScanList scans;
    scans.user_id = "agent";
    GpsTrack track;
    track.user_id = "agent";
    for (int k = 0; k <= 150; ++k) {
        ScanResult s;
        s.timestamp = kT0 + 600 * k;
        s.observations.emplace(scenarios::mac(1), -50);
        scans.scans.push_back(std::move(s));
        GpsPoint p;
        p.latitude = kBase.lat;
        p.longitude = kBase.lon;
        p.accuracy = 10.0;
        p.timestamp = kT0 + 600 * k;
        track.points.push_back(p);
    }

    const auto batches = emit_batches("agent", scans, track, cfg);
    REQUIRE(batches.size() == 5);  // 25 h of data in 6 h slices

    std::size_t total_scans = 0, total_fixes = 0;
    for (std::size_t i = 0; i < batches.size(); ++i) {
        const auto& b = batches[i];
        CHECK(b.user_id == "agent");
        CHECK(b.start == kT0 + static_cast<int64_t>(i) * 6 * 3600);
        CHECK(b.end <= b.start + 6 * 3600 - 1);
        for (const auto& s : b.scans) {
            CHECK(s.timestamp >= b.start);
            CHECK(s.timestamp <= b.end);
        }
        for (const auto& p : b.fixes) {
            CHECK(p.timestamp >= b.start);
            CHECK(p.timestamp <= b.end);
        }
        total_scans += b.scans.size();
        total_fixes += b.fixes.size();
    }
    CHECK(total_scans == scans.scans.size());
    CHECK(total_fixes == track.points.size());

    CHECK(emit_batches("agent", ScanList{}, GpsTrack{}, cfg).empty());
}

TEST_CASE("simulated batches survive the store round trip", "[synth]") {
    const auto setup = scenarios::split_level_home();
    const Config cfg;
    const SimResult r = simulate(setup.world, setup.scenario, cfg, 5);
    const auto& scans = r.scans.at(setup.user);
    const auto& track = r.tracks.at(setup.user);

    namespace fs = std::filesystem;
    const fs::path root =
        fs::temp_directory_path() / ("trailmine-synth-" + std::to_string(::getpid()));
    fs::remove_all(root);
    Store store(root);
    for (const auto& b : emit_batches(setup.user, scans, track, cfg)) {
        const IngestReport rep = store.ingest_batch(encode_batch(b));
        CHECK(rep.rejects.empty());
        CHECK(rep.duplicates == 0);
    }

    const auto [back_scans, back_track] = store.read_user(setup.user);
    CHECK(back_scans.scans == scans.scans);
    CHECK(back_track.points == track.points);
    fs::remove_all(root);
}

TEST_CASE("world and scenario files round trip", "[synth]") {
    const auto setup = scenarios::corridor_commute(2);
    const auto wj = to_json(setup.world);
    CHECK(to_json(world_from_json(wj)) == wj);

    const auto sj = to_json(setup.scenario);
    CHECK(to_json(scenario_from_json(sj)) == sj);
}
