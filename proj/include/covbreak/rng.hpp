#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace covbreak::rng {

// One scramble round of splitmix64. Used to derive substream seeds; the
// output sequence of mt19937_64 is fully specified by the standard, so a
// (root seed, stream id) pair reproduces bit-identically everywhere.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Seed for substream `a` (optionally sub-substream `b`) of a root seed.
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a, std::uint64_t b = 0) {
    return splitmix64(splitmix64(splitmix64(root) ^ a) ^ b);
}

// Deterministic RNG stream. std::uniform_*_distribution is implementation-
// defined, so all draws are derived from raw mt19937_64 output here.
class Stream {
public:
    explicit Stream(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform on [0, 1).
    double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    // Uniform integer on [0, bound); Lemire's unbiased multiply-shift.
    std::uint64_t bounded(std::uint64_t bound) {
        __uint128_t m = static_cast<__uint128_t>(gen_()) * bound;
        auto lo = static_cast<std::uint64_t>(m);
        if (lo < bound) {
            const std::uint64_t threshold = (0 - bound) % bound;
            while (lo < threshold) {
                m = static_cast<__uint128_t>(gen_()) * bound;
                lo = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    // Standard normal via Box-Muller; the second value of each pair is cached.
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        // u1 in (0, 1] keeps log() finite.
        const double u1 = static_cast<double>((gen_() >> 11) + 1) * 0x1.0p-53;
        const double u2 = static_cast<double>(gen_() >> 11) * 0x1.0p-53;
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace covbreak::rng
