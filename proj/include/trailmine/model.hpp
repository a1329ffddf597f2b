#pragma once

#include <cctype>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "trailmine/geo.hpp"

namespace trailmine {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct EmptyFingerprint : std::invalid_argument {
    EmptyFingerprint() : std::invalid_argument("fingerprint has no entries") {}
};

struct EmptyCluster : std::invalid_argument {
    EmptyCluster() : std::invalid_argument("cluster has no members") {}
};

struct NoStayPoints : std::invalid_argument {
    NoStayPoints() : std::invalid_argument("no stay points to choose from") {}
};

struct CorruptStream : std::runtime_error {
    explicit CorruptStream(const std::string& what) : std::runtime_error(what) {}
};

struct MissingGpsTrack : std::invalid_argument {
    MissingGpsTrack()
        : std::invalid_argument("scans present but no GPS fixes to anchor them") {}
};

// ---------------------------------------------------------------------------
// MAC address
// ---------------------------------------------------------------------------

/// 48-bit access-point identifier. Canonical rendering is 12 lowercase hex
/// digits with no separators; parsing also accepts ':' or '-' separated forms.
class Mac {
public:
    Mac() = default;

    static std::optional<Mac> parse(std::string_view text) {
        uint64_t bits = 0;
        int digits = 0;
        for (char c : text) {
            if (c == ':' || c == '-') continue;
            int v;
            if (c >= '0' && c <= '9') v = c - '0';
            else if (c >= 'a' && c <= 'f') v = c - 'a' + 10;
            else if (c >= 'A' && c <= 'F') v = c - 'A' + 10;
            else return std::nullopt;
            if (++digits > 12) return std::nullopt;
            bits = (bits << 4) | static_cast<uint64_t>(v);
        }
        if (digits != 12) return std::nullopt;
        return Mac(bits);
    }

    static Mac from_bits(uint64_t bits) { return Mac(bits & 0xFFFFFFFFFFFFull); }

    uint64_t bits() const { return bits_; }

    std::string to_string() const {
        static const char* hex = "0123456789abcdef";
        std::string out(12, '0');
        for (int i = 0; i < 12; ++i)
            out[11 - i] = hex[(bits_ >> (4 * i)) & 0xF];
        return out;
    }

    friend auto operator<=>(const Mac&, const Mac&) = default;

private:
    explicit Mac(uint64_t bits) : bits_(bits) {}
    uint64_t bits_ = 0;
};

// ---------------------------------------------------------------------------
// Scans and fingerprints
// ---------------------------------------------------------------------------

/// One observed access point: MAC plus received signal strength in dBm.
/// RSS is always negative; more negative means weaker.
struct ApObservation {
    Mac mac;
    int rss = -100;
};

/// One WiFi scan: the set of access points heard at a single instant,
/// keyed by MAC (no duplicates), with the UTC timestamp of the scan.
struct ScanResult {
    std::map<Mac, int> observations;
    int64_t timestamp = 0;

    std::size_t ap_count() const { return observations.size(); }

    friend bool operator==(const ScanResult&, const ScanResult&) = default;
};

/// Time-ordered scans of one user.
struct ScanList {
    std::string user_id;
    std::vector<ScanResult> scans;

    std::size_t size() const { return scans.size(); }
};

/// Aggregate signature of a place: MAC -> mean RSS over the scans that heard
/// it. The entry count is the fingerprint size used by the adaptive
/// threshold rule.
struct Fingerprint {
    std::map<Mac, double> entries;

    std::size_t size() const { return entries.size(); }
    bool empty() const { return entries.empty(); }

    static Fingerprint from_scan(const ScanResult& scan) {
        Fingerprint fp;
        for (const auto& [mac, rss] : scan.observations)
            fp.entries.emplace(mac, static_cast<double>(rss));
        return fp;
    }

    friend bool operator==(const Fingerprint&, const Fingerprint&) = default;
};

// ---------------------------------------------------------------------------
// GPS
// ---------------------------------------------------------------------------

/// One GPS fix. Accuracy is the radius estimate in meters reported with the
/// fix; smaller is better.
struct GpsPoint {
    double latitude = 0.0;
    double longitude = 0.0;
    double accuracy = 0.0;
    int64_t timestamp = 0;

    LatLon position() const { return {latitude, longitude}; }

    friend bool operator==(const GpsPoint&, const GpsPoint&) = default;
};

enum class StaySource { gps, wifi, fused };

inline const char* to_string(StaySource s) {
    switch (s) {
        case StaySource::gps: return "gps";
        case StaySource::wifi: return "wifi";
        case StaySource::fused: return "fused";
    }
    return "?";
}

/// A dwell: the user remained within a bounded radius from arrive to depart.
struct StayPoint {
    LatLon centroid;
    int64_t arrive = 0;
    int64_t depart = 0;
    StaySource source = StaySource::gps;
    std::string label;

    int64_t dwell_s() const { return depart - arrive; }
};

// ---------------------------------------------------------------------------
// POI clusters
// ---------------------------------------------------------------------------

struct VisitInterval {
    int64_t arrive = 0;
    int64_t depart = 0;

    friend bool operator==(const VisitInterval&, const VisitInterval&) = default;
};

/// A WiFi-derived indoor POI: the scans that formed it, its fingerprint, and
/// the visit intervals reconstructed from member timestamps. poi_id is unique
/// only within the GPS stay region the cluster was extracted from.
struct PoiCluster {
    int poi_id = 0;
    std::vector<std::size_t> member_indices;
    Fingerprint fingerprint;
    std::vector<VisitInterval> visits;

    int64_t total_dwell_s() const {
        int64_t total = 0;
        for (const auto& v : visits) total += v.depart - v.arrive;
        return total;
    }
};

/// Zero-padded rendering used in tabular output ("00", "01", ...).
inline std::string poi_display_id(int poi_id) {
    std::string digits = std::to_string(poi_id);
    return digits.size() >= 2 ? digits : "0" + digits;
}

/// Half-open is deliberately avoided here: reports and batch intervals treat
/// both endpoints as included, matching record timestamps.
struct TimeWindow {
    int64_t start = 0;
    int64_t end = 0;

    bool contains(int64_t t) const { return t >= start && t <= end; }
    bool empty() const { return end < start; }

    friend bool operator==(const TimeWindow&, const TimeWindow&) = default;
};

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

/// All pipeline parameters in one value. Defaults follow the reference
/// deployment: 5-minute sampling, 20-minute dwells, minPts 4, adaptive
/// similarity thresholds switched at 35 APs, and a 25 m GPS accuracy cutoff.
struct Config {
    // Sampling and dwell
    int64_t scan_interval_s = 300;
    int64_t min_dwell_s = 1200;

    // WiFi POI clustering
    int min_pts_poi = 4;
    int ap_low_count = 35;
    double eps_low = 0.4;
    double eps_high = 0.6;

    // Community detection
    double louvain_partition_threshold = 0.5;

    // Micro mobility
    double micromobility_eps = 0.3;
    int min_pts_micro = 1;
    double gps_accuracy_max_m = 25.0;

    // Heatmap
    double heatmap_cell_m = 25.0;

    // GPS cleaning and stay points
    double max_speed_mps = 50.0;
    double gps_accuracy_filter_m = 50.0;
    double stay_radius_m = 200.0;
    double geo_eps_m = 50.0;
    int geo_min_pts = 1;

    // Upload batching
    int64_t max_batch_hours = 6;

    // Local-time offset applied when rendering dates and times in reports.
    int64_t utc_offset_s = 0;

    /// Nearest-fix matching tolerance: half the scan interval.
    int64_t nearest_fix_tolerance_s() const { return scan_interval_s / 2; }
};

// ---------------------------------------------------------------------------
// Scan validation
// ---------------------------------------------------------------------------

enum class RejectReason { malformed_mac, out_of_range_rss, missing_timestamp };

inline const char* to_string(RejectReason r) {
    switch (r) {
        case RejectReason::malformed_mac: return "MalformedMac";
        case RejectReason::out_of_range_rss: return "OutOfRangeRss";
        case RejectReason::missing_timestamp: return "MissingTimestamp";
    }
    return "?";
}

struct Rejection {
    RejectReason reason;
    std::string detail;
};

/// Candidate scan record before validation. MAC strings may use any accepted
/// separator style and mixed case; duplicates are allowed.
struct RawScan {
    std::optional<int64_t> timestamp;
    std::vector<std::pair<std::string, int>> observations;
};

/// Normalizes a candidate scan: MACs lowercased and deduplicated (keeping the
/// strongest RSS), timestamps required, RSS restricted to [-120, -1] dBm.
inline std::variant<ScanResult, Rejection> validate_scan(const RawScan& raw) {
    if (!raw.timestamp)
        return Rejection{RejectReason::missing_timestamp, "scan has no timestamp"};
    ScanResult out;
    out.timestamp = *raw.timestamp;
    for (const auto& [mac_text, rss] : raw.observations) {
        auto mac = Mac::parse(mac_text);
        if (!mac)
            return Rejection{RejectReason::malformed_mac, "bad mac: " + mac_text};
        if (rss >= 0 || rss < -120)
            return Rejection{RejectReason::out_of_range_rss,
                             mac_text + " rss " + std::to_string(rss)};
        auto [it, inserted] = out.observations.emplace(*mac, rss);
        if (!inserted && rss > it->second) it->second = rss;  // keep strongest
    }
    return out;
}

}  // namespace trailmine
