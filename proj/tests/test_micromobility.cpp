#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <numeric>
#include <vector>

#include "support/scenarios.hpp"
#include "trailmine/micromobility.hpp"
#include "trailmine/synth.hpp"

using namespace trailmine;
using scenarios::kBase;
using scenarios::kT0;

namespace {

ScanResult scan_of(int64_t t, std::vector<int> macs, int rss = -60) {
    ScanResult s;
    s.timestamp = t;
    for (int m : macs) s.observations.emplace(scenarios::mac(m), rss);
    return s;
}

GpsPoint fix_at(LatLon pos, int64_t t, double accuracy) {
    return {pos.lat, pos.lon, accuracy, t};
}

StayPoint stay_span(int64_t arrive, int64_t depart) {
    StayPoint s;
    s.centroid = kBase;
    s.arrive = arrive;
    s.depart = depart;
    return s;
}

std::vector<int> iota_macs(int first, int count) {
    std::vector<int> v(count);
    std::iota(v.begin(), v.end(), first);
    return v;
}

}  // namespace

TEST_CASE("travel windows take what lies strictly between stays", "[micro]") {
    GpsTrack track;
    track.user_id = "u";
    ScanList scans;
    scans.user_id = "u";
    for (int64_t t : {500, 1000, 2000, 2001, 3000, 4999, 5000, 5500, 6000, 7000}) {
        track.points.push_back(fix_at(kBase, t, 8.0));
        scans.scans.push_back(scan_of(t, {1, 2, 3}));
    }
    const std::vector<StayPoint> stays{stay_span(1000, 2000), stay_span(5000, 6000)};

    const auto [traj_track, traj_scans] = extract_travel_windows(stays, track, scans);
    const std::vector<int64_t> expect{2001, 3000, 4999};
    REQUIRE(traj_track.points.size() == expect.size());
    REQUIRE(traj_scans.scans.size() == expect.size());
    for (std::size_t i = 0; i < expect.size(); ++i) {
        CHECK(traj_track.points[i].timestamp == expect[i]);
        CHECK(traj_scans.scans[i].timestamp == expect[i]);
    }

    SECTION("no stays keeps everything") {
        const auto [all_track, all_scans] = extract_travel_windows({}, track, scans);
        CHECK(all_track.points.size() == track.points.size());
        CHECK(all_scans.scans.size() == scans.scans.size());
    }
    SECTION("stays out of order are refused") {
        CHECK_THROWS_AS(
            extract_travel_windows({stay_span(5000, 6000), stay_span(1000, 2000)},
                                   track, scans),
            std::invalid_argument);
    }
}

TEST_CASE("path clustering groups identical scans into one location", "[micro]") {
    const Config cfg;
    ScanList scans;
    scans.user_id = "u";
    GpsTrack track;
    track.user_id = "u";
    for (int64_t t = 0; t <= 1200; t += 300) {
        scans.scans.push_back(scan_of(t, iota_macs(0, 6)));
        track.points.push_back(fix_at(kBase, t, 8.0));
    }

    const auto clusters = cluster_path(scans, track, cfg);
    REQUIRE(clusters.size() == 1);
    CHECK(clusters[0].member_indices.size() == 5);
    CHECK(clusters[0].mode == RepresentativeMode::averaged_high_accuracy);
}

TEST_CASE("disjoint scans become singleton locations, never noise", "[micro]") {
    const Config cfg;  // min_pts_micro = 1
    ScanList scans;
    scans.user_id = "u";
    GpsTrack track;
    track.user_id = "u";
    for (int g = 0; g < 4; ++g) {
        scans.scans.push_back(scan_of(300 * g, iota_macs(100 * g, 5)));
        track.points.push_back(fix_at(offset_m(kBase, 50.0 * g, 0.0), 300 * g, 8.0));
    }

    const auto clusters = cluster_path(scans, track, cfg);
    REQUIRE(clusters.size() == 4);

    std::vector<std::size_t> covered;
    for (const auto& c : clusters)
        covered.insert(covered.end(), c.member_indices.begin(), c.member_indices.end());
    std::sort(covered.begin(), covered.end());
    CHECK(covered == std::vector<std::size_t>{0, 1, 2, 3});
}

TEST_CASE("path clustering edge inputs", "[micro]") {
    const Config cfg;
    CHECK(cluster_path(ScanList{}, GpsTrack{}, cfg).empty());

    ScanList scans;
    scans.scans.push_back(scan_of(0, {1, 2}));
    CHECK_THROWS_AS(cluster_path(scans, GpsTrack{}, cfg), MissingGpsTrack);
}

TEST_CASE("representative averages the accurate fixes", "[micro]") {
    const Config cfg;  // accuracy cutoff 25 m
    ScanList scans;
    scans.user_id = "u";
    GpsTrack track;
    track.user_id = "u";
    for (int k = 0; k < 3; ++k) scans.scans.push_back(scan_of(300 * k, iota_macs(0, 6)));
    track.points.push_back(fix_at(kBase, 0, 10.0));
    track.points.push_back(fix_at(offset_m(kBase, 100.0, 0.0), 300, 20.0));
    track.points.push_back(fix_at(offset_m(kBase, 0.0, 100.0), 600, 40.0));

    const auto clusters = cluster_path(scans, track, cfg);
    REQUIRE(clusters.size() == 1);
    const PathCluster& c = clusters[0];
    CHECK(c.mode == RepresentativeMode::averaged_high_accuracy);
    CHECK(c.representative.accuracy == Catch::Approx(15.0));

    const LatLon mid = offset_m(kBase, 50.0, 0.0);
    CHECK(c.representative.latitude == Catch::Approx(mid.lat).margin(1e-9));
    CHECK(c.representative.longitude == Catch::Approx(mid.lon).margin(1e-9));
    CHECK(c.representative.timestamp == 0);
}

TEST_CASE("with no accurate fix the best coarse fix stands in", "[micro]") {
    const Config cfg;
    ScanList scans;
    scans.user_id = "u";
    GpsTrack track;
    track.user_id = "u";
    scans.scans.push_back(scan_of(0, iota_macs(0, 6)));
    scans.scans.push_back(scan_of(300, iota_macs(0, 6)));
    const GpsPoint coarse = fix_at(offset_m(kBase, 30.0, 0.0), 0, 40.0);
    const GpsPoint coarser = fix_at(offset_m(kBase, 90.0, 0.0), 300, 60.0);
    track.points = {coarse, coarser};

    const auto clusters = cluster_path(scans, track, cfg);
    REQUIRE(clusters.size() == 1);
    CHECK(clusters[0].mode == RepresentativeMode::best_of_low_accuracy);
    CHECK(clusters[0].representative == coarse);
}

TEST_CASE("a cluster with no fix in its skew budget borrows the nearest", "[micro]") {
    const Config cfg;  // skew budget 150 s
    ScanList scans;
    scans.user_id = "u";
    scans.scans.push_back(scan_of(10000, iota_macs(0, 4)));
    GpsTrack track;
    track.user_id = "u";

    SECTION("accurate borrowed fix still averages") {
        track.points = {fix_at(kBase, 0, 8.0)};
        const auto clusters = cluster_path(scans, track, cfg);
        REQUIRE(clusters.size() == 1);
        CHECK(clusters[0].mode == RepresentativeMode::averaged_high_accuracy);
        CHECK(clusters[0].representative == track.points[0]);
    }
    SECTION("coarse borrowed fix falls back") {
        track.points = {fix_at(kBase, 0, 45.0)};
        const auto clusters = cluster_path(scans, track, cfg);
        REQUIRE(clusters.size() == 1);
        CHECK(clusters[0].mode == RepresentativeMode::best_of_low_accuracy);
        CHECK(clusters[0].representative == track.points[0]);
    }
}

TEST_CASE("distance error averages fix-to-representative gaps", "[micro]") {
    const Config cfg;
    ScanList scans;
    scans.user_id = "u";
    GpsTrack track;
    track.user_id = "u";

    // Group A: two fixes exactly at the representative. Group B: two fixes
    // 60 m apart whose representative is their midpoint.
    scans.scans.push_back(scan_of(0, iota_macs(0, 5)));
    scans.scans.push_back(scan_of(300, iota_macs(0, 5)));
    scans.scans.push_back(scan_of(600, iota_macs(100, 5)));
    scans.scans.push_back(scan_of(900, iota_macs(100, 5)));
    const LatLon q = offset_m(kBase, 500.0, 0.0);
    track.points = {fix_at(kBase, 0, 5.0), fix_at(kBase, 300, 5.0),
                    fix_at(q, 600, 5.0), fix_at(offset_m(q, 60.0, 0.0), 900, 5.0)};

    const auto clusters = cluster_path(scans, track, cfg);
    REQUIRE(clusters.size() == 2);
    CHECK(avg_distance_error_m(clusters, scans, track, cfg) ==
          Catch::Approx(15.0).margin(0.1));

    SECTION("fixes with no scan nearby are skipped") {
        track.points.push_back(fix_at(offset_m(kBase, 5000.0, 0.0), 99999, 5.0));
        CHECK(avg_distance_error_m(clusters, scans, track, cfg) ==
              Catch::Approx(15.0).margin(0.1));
    }
    SECTION("no clusters means no error") {
        CHECK(avg_distance_error_m({}, scans, track, cfg) == 0.0);
    }
}

TEST_CASE("threshold sweep reports one point per value", "[micro]") {
    const Config cfg;
    ScanList scans;
    scans.user_id = "u";
    GpsTrack track;
    track.user_id = "u";

    // Three spots in a chain: adjacent spots share 5 of 10 APs (similarity
    // 0.5), the ends share nothing. Low thresholds see one cluster, high
    // thresholds three.
    scans.scans.push_back(scan_of(0, iota_macs(0, 10)));
    scans.scans.push_back(scan_of(300, iota_macs(5, 10)));
    scans.scans.push_back(scan_of(600, iota_macs(10, 10)));
    track.points = {fix_at(kBase, 0, 8.0), fix_at(offset_m(kBase, 200.0, 0.0), 300, 8.0),
                    fix_at(offset_m(kBase, 400.0, 0.0), 600, 8.0)};

    const auto sweep = sweep_threshold(scans, track, {0.4, 0.6}, cfg);
    REQUIRE(sweep.size() == 2);
    CHECK(sweep[0].eps == 0.4);
    CHECK(sweep[0].cluster_count == 1);
    CHECK(sweep[1].eps == 0.6);
    CHECK(sweep[1].cluster_count == 3);
    CHECK(sweep[0].avg_distance_error_m > sweep[1].avg_distance_error_m);
    CHECK(sweep[1].avg_distance_error_m == Catch::Approx(0.0).margin(1e-6));

    CHECK_THROWS_AS(sweep_threshold(scans, track, {}, cfg), std::invalid_argument);
}

TEST_CASE("commute trajectories compress across the threshold grid", "[micro]") {
    const auto setup = scenarios::corridor_commute();
    const Config cfg;
    const auto sim = synth::simulate(setup.world, setup.scenario, cfg, 11);
    const auto& scans = sim.scans.at(setup.user);

    const GpsTrack cleaned = clean_track(sim.tracks.at(setup.user), cfg);
    const auto stays = extract_stay_points(cleaned, cfg);
    REQUIRE(stays.size() >= 10);  // flat and office on every round trip

    const auto [traj_track, traj_scans] = extract_travel_windows(stays, cleaned, scans);
    REQUIRE(traj_scans.scans.size() >= 100);

    const std::vector<double> grid{0.2, 0.25, 0.3, 0.4};
    const auto sweep = sweep_threshold(traj_scans, traj_track, grid, cfg);
    REQUIRE(sweep.size() == grid.size());
    for (std::size_t i = 1; i < sweep.size(); ++i) {
        CHECK(sweep[i].cluster_count >= sweep[i - 1].cluster_count);
        CHECK(sweep[i].avg_distance_error_m <= sweep[i - 1].avg_distance_error_m);
    }

    // At the default threshold the trajectory shrinks at least fivefold.
    const auto at_default =
        std::find_if(sweep.begin(), sweep.end(),
                     [](const SweepPoint& p) { return p.eps == 0.3; });
    REQUIRE(at_default != sweep.end());
    CHECK(at_default->cluster_count * 5 <= traj_scans.scans.size());
}
