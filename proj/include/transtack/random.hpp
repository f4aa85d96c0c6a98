#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace transtack {

// All randomness flows through std::mt19937_64, whose output sequence is
// pinned by the standard. The <random> distributions are not, so uniform
// draws and shuffling are implemented here to keep seeded results
// reproducible across compilers.

// 53 uniform bits mapped to [0, 1).
inline double uniform_unit(std::mt19937_64& engine) {
    return static_cast<double>(engine() >> 11) * 0x1p-53;
}

inline double uniform_in(std::mt19937_64& engine, double lo, double hi) {
    return lo + uniform_unit(engine) * (hi - lo);
}

// Unbiased draw from [0, bound). bound must be >= 1.
inline std::uint64_t uniform_below(std::mt19937_64& engine, std::uint64_t bound) {
    std::uint64_t mask = bound - 1;
    mask |= mask >> 1;
    mask |= mask >> 2;
    mask |= mask >> 4;
    mask |= mask >> 8;
    mask |= mask >> 16;
    mask |= mask >> 32;
    for (;;) {
        const std::uint64_t value = engine() & mask;
        if (value < bound) return value;
    }
}

// Fisher-Yates with the bounded draw above.
template <typename T>
void shuffle(std::vector<T>& values, std::mt19937_64& engine) {
    for (std::size_t i = values.size(); i > 1; --i) {
        std::swap(values[i - 1], values[uniform_below(engine, i)]);
    }
}

}  // namespace transtack
