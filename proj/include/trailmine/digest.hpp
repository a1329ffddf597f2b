#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace trailmine {

/// Incremental FNV-1a (64-bit). Used for input digests and seed derivation;
/// stable across platforms, not cryptographic.
class Fnv1a64 {
public:
    Fnv1a64& update(std::string_view bytes) {
        for (unsigned char c : bytes) {
            hash_ ^= c;
            hash_ *= 0x100000001b3ULL;
        }
        return *this;
    }

    uint64_t value() const { return hash_; }

    std::string hex() const {
        static const char* digits = "0123456789abcdef";
        std::string out(16, '0');
        uint64_t v = hash_;
        for (int i = 15; i >= 0; --i, v >>= 4) out[i] = digits[v & 0xF];
        return out;
    }

private:
    uint64_t hash_ = 0xcbf29ce484222325ULL;
};

inline uint64_t fnv1a_64(std::string_view bytes) {
    return Fnv1a64().update(bytes).value();
}

}  // namespace trailmine
