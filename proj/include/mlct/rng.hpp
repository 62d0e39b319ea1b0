#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace mlct {

// All randomness flows from one root seed through named sub-streams, so
// data generation, init, training and sampling can be reproduced
// independently of each other.
inline uint64_t substream_seed(uint64_t root, std::string_view name) {
    uint64_t h = 14695981039346656037ull ^ root;
    for (char c : name) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    // splitmix64 finalizer
    h += 0x9e3779b97f4a7c15ull;
    h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ull;
    h = (h ^ (h >> 27)) * 0x94d049bb133111ebull;
    return h ^ (h >> 31);
}

inline std::mt19937_64 make_rng(uint64_t root, std::string_view name) {
    return std::mt19937_64(substream_seed(root, name));
}

}  // namespace mlct
