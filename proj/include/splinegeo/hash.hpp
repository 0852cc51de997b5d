#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace splinegeo {

inline constexpr std::uint64_t kFnvOffset = 0xCBF29CE484222325ULL;

/// FNV-1a, 64 bit. Chain calls by passing the previous result as `h`.
inline std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t h = kFnvOffset) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
        h ^= p[i];
        h *= 0x100000001B3ULL;
    }
    return h;
}

inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = kFnvOffset) {
    return fnv1a64(s.data(), s.size(), h);
}

}  // namespace splinegeo
