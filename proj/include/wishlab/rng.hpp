#ifndef WISHLAB_RNG_HPP
#define WISHLAB_RNG_HPP

#include <cstdint>
#include <random>

namespace wishlab {

using Rng = std::mt19937_64;

/// Independent generator for replication `stream` of a run seeded with
/// `seed`. Depends only on the pair, never on scheduling.
inline Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                      0x57534831u};
    return Rng(seq);
}

} // namespace wishlab

#endif // WISHLAB_RNG_HPP
