#ifndef RECALL_HASHING_HPP
#define RECALL_HASHING_HPP

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

namespace recall
{

// FNV-1a, 64 bit. Stable across platforms, used for content ids.
inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL)
{
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Uniform double in [0, 1) from the top 53 bits.
inline double unit_interval(std::uint64_t x)
{
    return static_cast<double>(x >> 11) * 0x1.0p-53;
}

inline std::string hex64(std::uint64_t x)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
    return buf;
}

} // namespace recall

#endif
