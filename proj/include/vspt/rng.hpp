#pragma once
#include <cstdint>
#include <random>

namespace vspt {

// splitmix64, used to derive independent sub-seeds from one master seed.
inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline uint64_t derive_seed(uint64_t base, uint64_t a) {
    return splitmix64(base ^ splitmix64(a));
}

inline uint64_t derive_seed(uint64_t base, uint64_t a, uint64_t b) {
    return derive_seed(derive_seed(base, a), b);
}

inline std::mt19937_64 make_rng(uint64_t seed) {
    return std::mt19937_64(splitmix64(seed));
}

} // namespace vspt
