#pragma once

#include <cmath>
#include <cstdint>

namespace allee {

// SplitMix64 finalizer; full-avalanche 64-bit mix.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
}

constexpr std::uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ULL;

// Deterministic seed derivation for independent streams:
//
//   split_seed(master, k) = mix64(master + (k + 1) * 0x9e3779b97f4a7c15)
//
// Replicate k of a run uses split_seed(master, k) as its base, and nested
// purposes (event stream, initial condition, ...) split again from that base.
// This function is part of the output contract: CSVs are reproducible from a
// master seed only as long as the derivation stays fixed, so do not change it.
constexpr std::uint64_t split_seed(std::uint64_t master, std::uint64_t k) noexcept {
    return mix64(master + kGoldenGamma * (k + 1));
}

// xoshiro256++ (Blackman & Vigna 2019), state seeded through SplitMix64.
// Fast, 256-bit state, passes BigCrush; plenty for Monte Carlo work.
class Rng {
public:
    explicit Rng(std::uint64_t seed) noexcept {
        std::uint64_t sm = seed;
        for (auto& word : s_) {
            sm += kGoldenGamma;
            word = mix64(sm);
        }
    }

    std::uint64_t next() noexcept {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform on the open interval (0,1): (n + 0.5) * 2^-52 with n in [0, 2^52),
    // so the output lives in [2^-53, 1 - 2^-53] and never hits an endpoint.
    // (A 53-bit n would put n + 0.5 halfway between representable doubles and
    // ties-to-even can round the top value all the way up to 1.0.)
    double uniform01() noexcept {
        return (static_cast<double>(next() >> 12) + 0.5) * 0x1.0p-52;
    }

    // Exp(1) waiting time; strictly positive because uniform01 avoids 0 and 1.
    double exp1() noexcept { return -std::log(uniform01()); }

    // Uniform integer in [0, n) without modulo bias (Lemire 2019, with rejection).
    std::uint64_t below(std::uint64_t n) noexcept {
        unsigned __int128 m = static_cast<unsigned __int128>(next()) * n;
        auto lo = static_cast<std::uint64_t>(m);
        if (lo < n) {
            const std::uint64_t t = (0 - n) % n;
            while (lo < t) {
                m = static_cast<unsigned __int128>(next()) * n;
                lo = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    // Fair bit from a dedicated draw (top bit).
    int bit() noexcept { return static_cast<int>(next() >> 63); }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t s_[4];
};

}  // namespace allee
