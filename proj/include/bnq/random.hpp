#pragma once

#include <cstdint>
#include <random>

namespace bnq {

using Rng = std::mt19937_64;

/// Counter-based seed splitting: the seed for work unit (stream, index) depends
/// only on the master seed and the unit's coordinates, never on scheduling.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index = 0);

inline Rng make_rng(std::uint64_t master, std::uint64_t stream, std::uint64_t index = 0) {
    return Rng(derive_seed(master, stream, index));
}

}  // namespace bnq
