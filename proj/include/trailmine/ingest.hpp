#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <variant>
#include <vector>

#include <zlib.h>

#include <nlohmann/json.hpp>

#include "trailmine/gps_pipeline.hpp"
#include "trailmine/model.hpp"

namespace trailmine {

inline constexpr const char* kTraceExtension = ".mtrace.gz";

// ---------------------------------------------------------------------------
// gzip codec
// ---------------------------------------------------------------------------

/// gzip-compresses a buffer. Output bytes are deterministic: zlib's default
/// gzip header carries mtime 0 and a fixed level/OS marker.
inline std::string gzip_compress(std::string_view raw) {
    z_stream zs{};
    if (deflateInit2(&zs, Z_BEST_COMPRESSION, Z_DEFLATED, 15 + 16, 8,
                     Z_DEFAULT_STRATEGY) != Z_OK)
        throw std::runtime_error("deflateInit2 failed");

    std::string out(deflateBound(&zs, static_cast<uLong>(raw.size())), '\0');
    zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(raw.data()));
    zs.avail_in = static_cast<uInt>(raw.size());
    zs.next_out = reinterpret_cast<Bytef*>(out.data());
    zs.avail_out = static_cast<uInt>(out.size());

    const int rc = deflate(&zs, Z_FINISH);
    deflateEnd(&zs);
    if (rc != Z_STREAM_END) throw std::runtime_error("deflate did not finish");
    out.resize(zs.total_out);
    return out;
}

/// Inflates a gzip stream. Throws CorruptStream on malformed input or
/// trailing garbage after the gzip member.
inline std::string gzip_decompress(std::string_view gz) {
    z_stream zs{};
    if (inflateInit2(&zs, 15 + 16) != Z_OK)
        throw std::runtime_error("inflateInit2 failed");

    zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(gz.data()));
    zs.avail_in = static_cast<uInt>(gz.size());

    std::string out;
    char buf[1 << 15];
    int rc = Z_OK;
    while (rc != Z_STREAM_END) {
        zs.next_out = reinterpret_cast<Bytef*>(buf);
        zs.avail_out = sizeof(buf);
        rc = inflate(&zs, Z_NO_FLUSH);
        if (rc != Z_OK && rc != Z_STREAM_END) {
            inflateEnd(&zs);
            throw CorruptStream("gzip stream is corrupt");
        }
        out.append(buf, sizeof(buf) - zs.avail_out);
    }
    const bool trailing = zs.avail_in != 0;
    inflateEnd(&zs);
    if (trailing) throw CorruptStream("trailing bytes after gzip stream");
    return out;
}

// ---------------------------------------------------------------------------
// Record line codec
// ---------------------------------------------------------------------------

/// Opening line of every batch stream: carries the owner and the interval so
/// the stream is self-describing.
struct BatchHeader {
    std::string user_id;
    int64_t start = 0;
    int64_t end = 0;

    bool operator==(const BatchHeader&) const = default;
};

namespace detail {

struct LineError {
    std::string message;
};

using ParsedLine = std::variant<BatchHeader, ScanResult, GpsPoint, LineError>;

inline std::string scan_line(const ScanResult& s) {
    nlohmann::ordered_json j;
    j["t"] = s.timestamp;
    j["k"] = "w";
    auto aps = nlohmann::ordered_json::array();
    for (const auto& [mac, rss] : s.observations)
        aps.push_back({mac.to_string(), rss});
    j["ap"] = std::move(aps);
    return j.dump();
}

inline std::string fix_line(const GpsPoint& p) {
    nlohmann::ordered_json j;
    j["t"] = p.timestamp;
    j["k"] = "g";
    j["lat"] = p.latitude;
    j["lon"] = p.longitude;
    j["acc"] = p.accuracy;
    return j.dump();
}

inline std::string header_line(const BatchHeader& h) {
    nlohmann::ordered_json j;
    j["t"] = h.start;
    j["k"] = "b";
    j["user"] = h.user_id;
    j["end"] = h.end;
    return j.dump();
}

inline ParsedLine parse_line(std::string_view line) {
    const auto j = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded() || !j.is_object()) return LineError{"not a JSON object"};
    if (!j.contains("k") || !j.at("k").is_string()) return LineError{"missing record kind"};
    const std::string kind = j.at("k").get<std::string>();

    const bool has_t = j.contains("t") && j.at("t").is_number_integer();

    if (kind == "b") {
        if (!has_t) return LineError{"batch header missing start"};
        if (!j.contains("user") || !j.at("user").is_string())
            return LineError{"batch header missing user"};
        if (!j.contains("end") || !j.at("end").is_number_integer())
            return LineError{"batch header missing end"};
        return BatchHeader{j.at("user").get<std::string>(), j.at("t").get<int64_t>(),
                           j.at("end").get<int64_t>()};
    }
    if (kind == "w") {
        RawScan raw;
        if (has_t) raw.timestamp = j.at("t").get<int64_t>();
        if (!j.contains("ap") || !j.at("ap").is_array())
            return LineError{"scan record missing ap list"};
        for (const auto& entry : j.at("ap")) {
            if (!entry.is_array() || entry.size() != 2 || !entry[0].is_string() ||
                !entry[1].is_number_integer())
                return LineError{"malformed ap entry"};
            raw.observations.push_back(
                {entry[0].get<std::string>(), entry[1].get<int>()});
        }
        auto checked = validate_scan(raw);
        if (const auto* rej = std::get_if<Rejection>(&checked))
            return LineError{std::string(to_string(rej->reason)) + ": " + rej->detail};
        return std::get<ScanResult>(std::move(checked));
    }
    if (kind == "g") {
        if (!has_t) return LineError{"fix record missing timestamp"};
        if (!j.contains("lat") || !j.at("lat").is_number() || !j.contains("lon") ||
            !j.at("lon").is_number() || !j.contains("acc") || !j.at("acc").is_number())
            return LineError{"fix record missing lat/lon/acc"};
        GpsPoint p;
        p.timestamp = j.at("t").get<int64_t>();
        p.latitude = j.at("lat").get<double>();
        p.longitude = j.at("lon").get<double>();
        p.accuracy = j.at("acc").get<double>();
        if (p.accuracy < 0.0) return LineError{"negative accuracy"};
        return p;
    }
    return LineError{"unknown record kind '" + kind + "'"};
}

inline std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) {
            lines.push_back(text.substr(pos));
            break;
        }
        lines.push_back(text.substr(pos, nl - pos));
        pos = nl + 1;
    }
    return lines;
}

/// Record lines in wire order: time-ordered, fixes before scans at equal
/// timestamps, original order among exact peers.
inline std::vector<std::string> record_lines(const std::vector<ScanResult>& scans,
                                             const std::vector<GpsPoint>& fixes) {
    struct Keyed {
        int64_t t;
        int kind;  // 0 = fix, 1 = scan
        std::size_t ord;
        std::string text;
    };
    std::vector<Keyed> keyed;
    keyed.reserve(scans.size() + fixes.size());
    for (std::size_t i = 0; i < fixes.size(); ++i)
        keyed.push_back({fixes[i].timestamp, 0, i, fix_line(fixes[i])});
    for (std::size_t i = 0; i < scans.size(); ++i)
        keyed.push_back({scans[i].timestamp, 1, i, scan_line(scans[i])});
    std::sort(keyed.begin(), keyed.end(), [](const Keyed& a, const Keyed& b) {
        return std::tie(a.t, a.kind, a.ord) < std::tie(b.t, b.kind, b.ord);
    });
    std::vector<std::string> lines;
    lines.reserve(keyed.size());
    for (auto& k : keyed) lines.push_back(std::move(k.text));
    return lines;
}

inline void atomic_write_file(const std::filesystem::path& path, std::string_view bytes) {
    const auto tmp = path.parent_path() / (path.filename().string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw std::runtime_error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
    return bytes;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Batch codec
// ---------------------------------------------------------------------------

/// One upload unit: everything a device collected over its interval,
/// nominally six hours.
struct Batch {
    std::string user_id;
    int64_t start = 0;
    int64_t end = 0;
    std::vector<ScanResult> scans;
    std::vector<GpsPoint> fixes;

    bool operator==(const Batch&) const = default;
};

/// Serializes a batch to its compressed wire form: a batch header line
/// followed by time-ordered record lines, gzipped. decode_batch inverts this
/// exactly, and re-encoding a decoded batch reproduces the bytes.
inline std::string encode_batch(const Batch& b) {
    if (b.end < b.start) throw std::invalid_argument("batch interval is inverted");
    std::string text = detail::header_line({b.user_id, b.start, b.end});
    text.push_back('\n');
    for (const auto& line : detail::record_lines(b.scans, b.fixes)) {
        text += line;
        text.push_back('\n');
    }
    return gzip_compress(text);
}

/// Parses a compressed batch stream. Throws CorruptStream when the gzip
/// layer, the header line, or any record line is unusable.
inline Batch decode_batch(std::string_view bytes) {
    const std::string text = gzip_decompress(bytes);
    const auto lines = detail::split_lines(text);
    if (lines.empty()) throw CorruptStream("batch stream has no header line");

    auto first = detail::parse_line(lines[0]);
    const auto* header = std::get_if<BatchHeader>(&first);
    if (!header) throw CorruptStream("batch stream does not start with a header line");

    Batch b;
    b.user_id = header->user_id;
    b.start = header->start;
    b.end = header->end;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        auto parsed = detail::parse_line(lines[i]);
        if (auto* scan = std::get_if<ScanResult>(&parsed))
            b.scans.push_back(std::move(*scan));
        else if (auto* fix = std::get_if<GpsPoint>(&parsed))
            b.fixes.push_back(std::move(*fix));
        else if (const auto* err = std::get_if<detail::LineError>(&parsed))
            throw CorruptStream("line " + std::to_string(i + 1) + ": " + err->message);
        else
            throw CorruptStream("line " + std::to_string(i + 1) +
                                ": unexpected batch header");
    }
    return b;
}

// ---------------------------------------------------------------------------
// Store
// ---------------------------------------------------------------------------

struct LineReject {
    std::size_t line_no = 0;
    std::string message;
};

struct IngestReport {
    std::string user_id;
    std::size_t accepted = 0;
    std::size_t duplicates = 0;
    std::vector<LineReject> rejects;
};

/// Directory-per-user record store. Each ingest seals one immutable segment
/// holding only the records that were new; index.json lists segments and the
/// timestamp sets used for idempotence. Records are keyed (user, timestamp,
/// kind), so re-ingesting a batch changes nothing.
class Store {
public:
    explicit Store(std::filesystem::path root) : root_(std::move(root)) {
        std::filesystem::create_directories(root_);
    }

    const std::filesystem::path& root() const { return root_; }

    IngestReport ingest_batch(std::string_view gz_bytes) {
        const std::string text = gzip_decompress(gz_bytes);
        const auto lines = detail::split_lines(text);
        if (lines.empty()) throw CorruptStream("batch stream has no header line");

        auto first = detail::parse_line(lines[0]);
        const auto* header = std::get_if<BatchHeader>(&first);
        if (!header) throw CorruptStream("batch stream does not start with a header line");
        if (!valid_user_id(header->user_id))
            throw CorruptStream("invalid user id '" + header->user_id + "'");
        if (header->end < header->start)
            throw CorruptStream("batch interval is inverted");

        IngestReport report;
        report.user_id = header->user_id;

        Index index = load_index(header->user_id);
        std::set<int64_t> batch_scan_ts, batch_fix_ts;
        std::vector<std::string> fresh_lines;

        for (std::size_t i = 1; i < lines.size(); ++i) {
            auto parsed = detail::parse_line(lines[i]);
            const std::size_t line_no = i + 1;
            if (const auto* err = std::get_if<detail::LineError>(&parsed)) {
                report.rejects.push_back({line_no, err->message});
                continue;
            }
            if (std::holds_alternative<BatchHeader>(parsed)) {
                report.rejects.push_back({line_no, "unexpected batch header"});
                continue;
            }
            int64_t t;
            bool is_scan;
            if (const auto* scan = std::get_if<ScanResult>(&parsed)) {
                t = scan->timestamp;
                is_scan = true;
            } else {
                t = std::get<GpsPoint>(parsed).timestamp;
                is_scan = false;
            }
            if (t < header->start || t > header->end) {
                report.rejects.push_back({line_no, "timestamp outside batch interval"});
                continue;
            }
            auto& known = is_scan ? index.scan_ts : index.fix_ts;
            auto& seen = is_scan ? batch_scan_ts : batch_fix_ts;
            if (known.count(t) || !seen.insert(t).second) {
                ++report.duplicates;
                continue;
            }
            fresh_lines.push_back(std::string(lines[i]));
            ++report.accepted;
        }

        if (!fresh_lines.empty()) {
            for (int64_t t : batch_scan_ts) index.scan_ts.insert(t);
            for (int64_t t : batch_fix_ts) index.fix_ts.insert(t);
            append_segment(header->user_id, index, fresh_lines);
        }
        return report;
    }

    /// All of a user's records, time-sorted regardless of ingestion order.
    std::pair<ScanList, GpsTrack> read_user(const std::string& user_id) const {
        ScanList scans;
        scans.user_id = user_id;
        GpsTrack track;
        track.user_id = user_id;

        const Index index = load_index(user_id);
        for (const auto& segment : index.segments) {
            const auto path = root_ / user_id / segment;
            const std::string text = gzip_decompress(detail::read_file(path));
            for (const auto line : detail::split_lines(text)) {
                auto parsed = detail::parse_line(line);
                if (auto* scan = std::get_if<ScanResult>(&parsed))
                    scans.scans.push_back(std::move(*scan));
                else if (auto* fix = std::get_if<GpsPoint>(&parsed))
                    track.points.push_back(std::move(*fix));
                else
                    throw CorruptStream("segment " + path.string() + " is damaged");
            }
        }
        std::stable_sort(scans.scans.begin(), scans.scans.end(),
                         [](const ScanResult& a, const ScanResult& b) {
                             return a.timestamp < b.timestamp;
                         });
        std::stable_sort(track.points.begin(), track.points.end(),
                         [](const GpsPoint& a, const GpsPoint& b) {
                             return a.timestamp < b.timestamp;
                         });
        return {std::move(scans), std::move(track)};
    }

    std::vector<std::string> users() const {
        std::vector<std::string> ids;
        if (!std::filesystem::exists(root_)) return ids;
        for (const auto& entry : std::filesystem::directory_iterator(root_))
            if (entry.is_directory()) ids.push_back(entry.path().filename().string());
        std::sort(ids.begin(), ids.end());
        return ids;
    }

    static bool valid_user_id(std::string_view id) {
        if (id.empty() || id.size() > 64) return false;
        for (char c : id) {
            const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                            (c >= '0' && c <= '9') || c == '_' || c == '-';
            if (!ok) return false;
        }
        return true;
    }

private:
    struct Index {
        std::vector<std::string> segments;
        std::set<int64_t> scan_ts;
        std::set<int64_t> fix_ts;
    };

    Index load_index(const std::string& user_id) const {
        Index index;
        const auto path = root_ / user_id / "index.json";
        if (!std::filesystem::exists(path)) return index;
        const auto j = nlohmann::json::parse(detail::read_file(path), nullptr, false);
        if (j.is_discarded() || !j.is_object())
            throw CorruptStream("index for user '" + user_id + "' is damaged");
        for (const auto& s : j.value("segments", nlohmann::json::array()))
            index.segments.push_back(s.get<std::string>());
        for (const auto& t : j.value("scan_ts", nlohmann::json::array()))
            index.scan_ts.insert(t.get<int64_t>());
        for (const auto& t : j.value("fix_ts", nlohmann::json::array()))
            index.fix_ts.insert(t.get<int64_t>());
        return index;
    }

    void append_segment(const std::string& user_id, Index& index,
                        const std::vector<std::string>& lines) {
        const auto dir = root_ / user_id;
        std::filesystem::create_directories(dir);

        char name[32];
        std::snprintf(name, sizeof(name), "%06zu%s", index.segments.size() + 1,
                      kTraceExtension);
        index.segments.push_back(name);

        std::string text;
        for (const auto& line : lines) {
            text += line;
            text.push_back('\n');
        }
        detail::atomic_write_file(dir / name, gzip_compress(text));

        nlohmann::ordered_json j;
        j["segments"] = index.segments;
        j["scan_ts"] = index.scan_ts;
        j["fix_ts"] = index.fix_ts;
        detail::atomic_write_file(dir / "index.json", j.dump());
    }

    std::filesystem::path root_;
};

}  // namespace trailmine
