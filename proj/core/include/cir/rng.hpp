#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace cir {

namespace detail {

inline std::uint64_t splitmix64_next(std::uint64_t& state) noexcept {
    state += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

}  // namespace detail

/// Seedable, portable 64-bit generator (splitmix64). All sampling primitives
/// are implemented here rather than via <random> distributions, whose output
/// is implementation-defined; every draw is reproducible from the seed alone.
class Rng {
public:
    explicit Rng(std::uint64_t seed) noexcept : state_(seed) {}

    std::uint64_t next_u64() noexcept { return detail::splitmix64_next(state_); }

    /// Uniform double in [0, 1), 53-bit resolution.
    double next_unit() noexcept {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [0, bound). Rejection sampling, unbiased.
    std::uint64_t next_below(std::uint64_t bound) noexcept {
        assert(bound > 0);
        const std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            const std::uint64_t r = next_u64();
            if (r >= threshold) return r % bound;
        }
    }

    /// Standard normal via Box-Muller. Consumes exactly two u64 draws per
    /// call; no cached second value, so the stream position is predictable.
    double next_gaussian() noexcept {
        const double u1 = 1.0 - next_unit();  // (0, 1]
        const double u2 = next_unit();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    bool next_bernoulli(double p) noexcept { return next_unit() < p; }

private:
    std::uint64_t state_;
};

/// Derives an independent substream from a root seed and a tag path.
/// Stream-splitting rule used throughout: each randomized quantity gets its
/// own path (e.g. one substream per class for first occurrences, one per
/// (class, experience) for repetition draws), so enlarging one dimension
/// never perturbs draws along another.
inline Rng substream(std::uint64_t seed, std::initializer_list<std::uint64_t> path) noexcept {
    std::uint64_t h = seed;
    (void)detail::splitmix64_next(h);
    for (std::uint64_t tag : path) {
        h ^= tag + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
        (void)detail::splitmix64_next(h);
    }
    return Rng(h);
}

/// Substream tags for the stream generator and the training stack.
/// Fixed values: part of the determinism contract for serialized streams.
namespace rng_tag {
inline constexpr std::uint64_t first_occurrence = 0x01;
inline constexpr std::uint64_t repetition = 0x02;
inline constexpr std::uint64_t sample_draw = 0x03;
inline constexpr std::uint64_t fixup = 0x04;
inline constexpr std::uint64_t dataset_means = 0x10;
inline constexpr std::uint64_t dataset_train = 0x11;
inline constexpr std::uint64_t dataset_test = 0x12;
inline constexpr std::uint64_t net_init = 0x20;
inline constexpr std::uint64_t shuffle = 0x21;
inline constexpr std::uint64_t augment = 0x22;
inline constexpr std::uint64_t mining = 0x23;
inline constexpr std::uint64_t projection_target = 0x24;
inline constexpr std::uint64_t replay = 0x25;
inline constexpr std::uint64_t mix = 0x26;
inline constexpr std::uint64_t tta = 0x27;
inline constexpr std::uint64_t stream_seed = 0x30;
inline constexpr std::uint64_t strategy_seed = 0x31;
}  // namespace rng_tag

}  // namespace cir
