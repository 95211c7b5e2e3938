#ifndef IGE_RNG_HPP
#define IGE_RNG_HPP

#include <cstdint>
#include <random>

namespace ige {

// Deterministic, collision-resistant seed mixing so that independent RNG
// streams can be keyed by (master seed, purpose tag, indices).  Streams keyed
// this way stay identical no matter how work is split across threads.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t x = a + 0x9e3779b97f4a7c15ULL + (b << 6) + (b >> 2);
    x ^= b + 0x9e3779b97f4a7c15ULL + (x << 17) + (x >> 9);
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::mt19937_64 rng_stream(std::uint64_t seed) { return std::mt19937_64(mix_seed(seed, 0)); }

inline std::mt19937_64 rng_stream(std::uint64_t seed, std::uint64_t tag) {
    return std::mt19937_64(mix_seed(seed, tag));
}

inline std::mt19937_64 rng_stream(std::uint64_t seed, std::uint64_t tag, std::uint64_t a) {
    return std::mt19937_64(mix_seed(mix_seed(seed, tag), a));
}

inline std::mt19937_64 rng_stream(std::uint64_t seed, std::uint64_t tag, std::uint64_t a,
                                  std::uint64_t b) {
    return std::mt19937_64(mix_seed(mix_seed(mix_seed(seed, tag), a), b));
}

// Purpose tags for stream separation.
namespace rng_tag {
constexpr std::uint64_t kTopology = 0x10;
constexpr std::uint64_t kChannel = 0x20;
constexpr std::uint64_t kDemand = 0x30;
constexpr std::uint64_t kPowerMatrix = 0x40;
constexpr std::uint64_t kSymbols = 0x50;
constexpr std::uint64_t kNoise = 0x60;
constexpr std::uint64_t kImpairment = 0x70;
constexpr std::uint64_t kWitness = 0x80;
}  // namespace rng_tag

}  // namespace ige

#endif
