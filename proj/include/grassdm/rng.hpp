#pragma once

#include "grassdm/types.hpp"

#include <cstdint>
#include <random>

namespace grassdm {

/// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Random engine for sample `index` of the stream rooted at `seed`.
inline std::mt19937_64 stream_engine(Seed seed, std::uint64_t index) {
    return std::mt19937_64{mix64(mix64(seed) ^ mix64(index + 0x5851f42d4c957f2dULL))};
}

/// Uniform double in [0, 1) from the top 53 bits.
template <class Engine>
double uniform01(Engine& engine) {
    return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [lo, hi] by rejection, independent of the standard
/// library's distribution implementation.
template <class Engine>
std::int64_t uniform_int(std::int64_t lo, std::int64_t hi, Engine& engine) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) return lo + static_cast<std::int64_t>(engine());
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % span);
    std::uint64_t draw = engine();
    while (draw >= limit) draw = engine();
    return lo + static_cast<std::int64_t>(draw % span);
}

/// Fill an n x m matrix with independent standard normal entries.
template <class Engine>
Matrix gaussian_matrix(Index rows, Index cols, Engine& engine) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix out(rows, cols);
    // column-major fill order
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) out(i, j) = normal(engine);
    return out;
}

}  // namespace grassdm
