#pragma once

#include <cstdint>
#include <random>

namespace wgpa {

using Rng = std::mt19937_64;

// splitmix64 step; used only to derive independent seed streams.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Deterministic substream: master seed -> (replication, lane) -> engine seed.
// Lanes separate environment / cost / execution / pairing randomness so that
// common-random-number comparisons stay aligned across mechanisms.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t replication, std::uint64_t lane) {
    std::uint64_t s = master;
    std::uint64_t a = splitmix64_next(s);
    s = a ^ (replication * 0xd1342543de82ef95ull + 0x2545f4914f6cdd1dull);
    std::uint64_t b = splitmix64_next(s);
    s = b ^ (lane * 0x9e3779b97f4a7c15ull + 0x94d049bb133111ebull);
    return splitmix64_next(s);
}

inline Rng make_stream(std::uint64_t master, std::uint64_t replication, std::uint64_t lane) {
    return Rng(derive_seed(master, replication, lane));
}

inline double uniform01(Rng& rng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace wgpa
