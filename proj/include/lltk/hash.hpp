#pragma once

#include <cstdint>
#include <cstring>
#include <string_view>

namespace lltk {

struct Hash128 {
    std::uint64_t lo = 0;
    std::uint64_t hi = 0;

    friend bool operator==(const Hash128 &a, const Hash128 &b) {
        return a.lo == b.lo && a.hi == b.hi;
    }
};

// MurmurHash3 x64 128-bit (Austin Appleby, public domain). Fixed algorithm so
// filter state and uniqueness hashes are reproducible across platforms.
Hash128 murmur3_x64_128(const void *data, std::size_t len, std::uint64_t seed);

inline Hash128 hash128(std::string_view s, std::uint64_t seed = 0) {
    return murmur3_x64_128(s.data(), s.size(), seed);
}

struct Hash128Hasher {
    std::size_t operator()(const Hash128 &h) const noexcept {
        return static_cast<std::size_t>(h.lo ^ (h.hi * 0x9e3779b97f4a7c15ull));
    }
};

} // namespace lltk
