// Seeded random number generation.
//
// Everything random in this library flows through SplitMix64 so that a run is
// a pure function of its integer seed and can be reproduced by any other
// implementation of the same recipe. The exact algorithms are pinned here:
//
//   raw stream   splitmix64: state += 0x9E3779B97F4A7C15; z = state;
//                z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9;
//                z = (z ^ (z >> 27)) * 0x94D049BB133111EB;
//                output z ^ (z >> 31)
//   unit double  (raw >> 11) * 2^-53, in [0, 1)
//   uniform      lo + (hi - lo) * unit
//   gaussian     Box-Muller: sqrt(-2 ln u1) * cos(2 pi u2) with
//                u1 = ((raw1 >> 11) + 1) * 2^-53 in (0, 1], u2 = unit raw2;
//                two raw draws per gaussian, no caching
//   below(n)     raw % n
//   shuffle      Fisher-Yates from the back: for i = n-1 .. 1, swap(v[i],
//                v[below(i + 1)])
//   derive_seed  splitmix64 output of (base ^ (0x9E3779B97F4A7C15 * (index+1)))
//
// derive_seed splits one user-facing seed into independent sub-streams
// (dataset generation, train/validation split, weight init, one per epoch
// for batch shuffling) without the streams ever sharing state.
#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace stepahead {

class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1), 53 bits of mantissa.
    double next_unit() {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    double next_uniform(double lo, double hi) {
        return lo + (hi - lo) * next_unit();
    }

    // Standard normal via basic Box-Muller; consumes exactly two raw draws.
    double next_gaussian() {
        const double u1 = static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
        const double u2 = next_unit();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * std::numbers::pi * u2);
    }

    // Uniform integer in [0, n). Modulo bias is negligible for the index
    // ranges used here and keeps the recipe trivial to port.
    std::uint64_t next_below(std::uint64_t n) { return next() % n; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[next_below(i)]);
        }
    }

private:
    std::uint64_t state_;
};

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    SplitMix64 g(base ^ (0x9E3779B97F4A7C15ULL * (index + 1)));
    return g.next();
}

// Sub-stream indices used with derive_seed. Epoch shuffles use
// kEpochStreamBase + epoch.
inline constexpr std::uint64_t kDataStream = 0;
inline constexpr std::uint64_t kSplitStream = 1;
inline constexpr std::uint64_t kInitStream = 2;
inline constexpr std::uint64_t kEpochStreamBase = 16;

} // namespace stepahead
