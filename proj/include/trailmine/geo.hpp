#pragma once

#include <cmath>

namespace trailmine {

inline constexpr double kEarthRadiusM = 6371000.0;

struct LatLon {
    double lat = 0.0;
    double lon = 0.0;

    friend bool operator==(const LatLon&, const LatLon&) = default;
};

inline double deg2rad(double deg) {
    return deg * M_PI / 180.0;
}

/// Great-circle distance in meters on a spherical Earth (R = 6371 km).
inline double haversine_m(double lat1, double lon1, double lat2, double lon2) {
    const double dlat = deg2rad(lat2 - lat1);
    const double dlon = deg2rad(lon2 - lon1);
    const double slat = std::sin(dlat / 2.0);
    const double slon = std::sin(dlon / 2.0);
    double a = slat * slat +
               slon * slon * std::cos(deg2rad(lat1)) * std::cos(deg2rad(lat2));
    a = std::fmin(std::fmax(a, 0.0), 1.0);
    const double c = 2.0 * std::atan2(std::sqrt(a), std::sqrt(1.0 - a));
    return kEarthRadiusM * c;
}

inline double haversine_m(const LatLon& a, const LatLon& b) {
    return haversine_m(a.lat, a.lon, b.lat, b.lon);
}

/// Meters spanned by one degree of latitude (constant on the sphere).
inline double meters_per_deg_lat() {
    return kEarthRadiusM * M_PI / 180.0;
}

/// Meters spanned by one degree of longitude at the given latitude.
inline double meters_per_deg_lon(double lat) {
    return meters_per_deg_lat() * std::cos(deg2rad(lat));
}

/// Offsets a position by (east, north) meters using the local tangent plane.
inline LatLon offset_m(const LatLon& origin, double east_m, double north_m) {
    return {origin.lat + north_m / meters_per_deg_lat(),
            origin.lon + east_m / meters_per_deg_lon(origin.lat)};
}

}  // namespace trailmine
