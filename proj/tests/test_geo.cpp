#include <catch2/catch_amalgamated.hpp>

#include "trailmine/geo.hpp"

using namespace trailmine;

TEST_CASE("haversine of identical points is zero") {
    const LatLon p{1.3521, 103.8198};
    REQUIRE(haversine_m(p, p) == 0.0);
}

TEST_CASE("haversine is symmetric") {
    const LatLon a{1.30, 103.80};
    const LatLon b{1.35, 103.90};
    REQUIRE(haversine_m(a, b) == Catch::Approx(haversine_m(b, a)));
}

TEST_CASE("one degree of latitude is about 111 km") {
    const double d = haversine_m({0.0, 0.0}, {1.0, 0.0});
    REQUIRE(d == Catch::Approx(111194.9).epsilon(0.001));
}

TEST_CASE("longitude degrees shrink with latitude") {
    const double at_equator = haversine_m({0.0, 0.0}, {0.0, 1.0});
    const double at_60 = haversine_m({60.0, 0.0}, {60.0, 1.0});
    REQUIRE(at_60 == Catch::Approx(at_equator * 0.5).epsilon(0.01));
}

TEST_CASE("offset_m round trips through haversine") {
    const LatLon origin{1.3521, 103.8198};
    const LatLon moved = offset_m(origin, 30.0, 40.0);
    REQUIRE(haversine_m(origin, moved) == Catch::Approx(50.0).epsilon(0.001));
}

TEST_CASE("offset_m with zero displacement is the identity") {
    const LatLon origin{-33.86, 151.21};
    const LatLon same = offset_m(origin, 0.0, 0.0);
    REQUIRE(same.lat == origin.lat);
    REQUIRE(same.lon == origin.lon);
}

TEST_CASE("meters per degree of longitude scales with cos(latitude)") {
    REQUIRE(meters_per_deg_lon(0.0) == Catch::Approx(meters_per_deg_lat()));
    REQUIRE(meters_per_deg_lon(60.0) ==
            Catch::Approx(meters_per_deg_lat() * 0.5).epsilon(1e-9));
}

TEST_CASE("triangle inequality holds on a sample") {
    const LatLon a{1.30, 103.80};
    const LatLon b{1.32, 103.85};
    const LatLon c{1.36, 103.82};
    REQUIRE(haversine_m(a, c) <= haversine_m(a, b) + haversine_m(b, c) + 1e-9);
}
