#pragma once

#include <cstdint>
#include <random>

namespace zerovanna {

/// Independent random streams keyed by (seed, block, purpose).
/// A block's draws depend only on this key, never on which thread produced them.
enum class StreamTag : std::uint32_t { brownian = 0, spot = 1, oracle = 2 };

inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t block, StreamTag tag) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32),
                      static_cast<std::uint32_t>(tag)};
    return std::mt19937_64(seq);
}

}  // namespace zerovanna
