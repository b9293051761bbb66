#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace metafed {

// splitmix64 finalizer; decorrelates nearby seed values.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Folds an arbitrary tuple of stream identifiers (run seed, round, node id,
// ...) into one 64-bit seed. Every independent random stream in the project
// derives its seed through this, so a run is a pure function of its seed.
inline std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts) {
    std::uint64_t h = 0x2545f4914f6cdd1dULL;
    for (std::uint64_t p : parts) {
        h = splitmix64(h ^ (p + 0x9e3779b97f4a7c15ULL));
    }
    return h;
}

inline std::mt19937_64 make_rng(std::initializer_list<std::uint64_t> parts) {
    return std::mt19937_64(mix_seed(parts));
}

// Stream tags: keep the per-purpose streams disjoint even for equal seeds.
namespace seed_tag {
inline constexpr std::uint64_t init = 0x496e6974ULL;       // parameter init
inline constexpr std::uint64_t data = 0x44617461ULL;       // node stream generation
inline constexpr std::uint64_t local = 0x4c6f636cULL;      // local training shuffles
inline constexpr std::uint64_t task = 0x5461736bULL;       // task sampling
inline constexpr std::uint64_t partition = 0x50617274ULL;  // non-IID partitioning
inline constexpr std::uint64_t shift = 0x53686674ULL;      // regime-shift tasks
inline constexpr std::uint64_t eval = 0x4576616cULL;       // held-out evaluation data
inline constexpr std::uint64_t central = 0x43656e74ULL;    // centralized baseline
}  // namespace seed_tag

}  // namespace metafed
