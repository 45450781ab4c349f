#pragma once

#include <cstdint>
#include <random>

namespace cfn {

// splitmix64; used to derive independent child seeds from a master seed
// so results do not depend on execution order.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                 std::uint64_t counter = 0) {
    return mix64(mix64(master ^ 0x5bf03635d658f3a1ULL) ^ mix64(stream) ^ counter);
}

inline std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(mix64(seed)); }

}  // namespace cfn
