#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace lar {

// Deterministic PRNG used everywhere instead of <random>, so that streams are
// reproducible byte-for-byte across compilers and standard libraries.
// PCG32 (Melissa O'Neill, pcg-random.org) seeded through SplitMix64.
class Rng {
public:
    explicit Rng(uint64_t seed) { reseed(seed); }

    void reseed(uint64_t seed) {
        uint64_t s = splitmix(seed);
        state_ = 0;
        inc_ = (splitmix(s) << 1u) | 1u;
        next_u32();
        state_ += s;
        next_u32();
    }

    uint32_t next_u32() {
        uint64_t old = state_;
        state_ = old * 6364136223846793005ULL + inc_;
        uint32_t xorshifted = static_cast<uint32_t>(((old >> 18u) ^ old) >> 27u);
        uint32_t rot = static_cast<uint32_t>(old >> 59u);
        return (xorshifted >> rot) | (xorshifted << ((-rot) & 31u));
    }

    uint64_t next_u64() {
        uint64_t hi = next_u32();
        return (hi << 32) | next_u32();
    }

    // Uniform in [0, 1).
    double uniform() { return next_u32() * (1.0 / 4294967296.0); }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n).
    uint32_t below(uint32_t n) { return n == 0 ? 0 : next_u32() % n; }

    // Standard normal via Box-Muller (fresh pair each call, spare discarded:
    // keeps the stream position independent of call parity).
    double normal() {
        double u1 = 0.0;
        while (u1 <= 1e-12) u1 = uniform();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    // Derive an independent child stream; label keeps substreams for
    // different purposes decorrelated even with equal indices.
    Rng fork(uint64_t index, std::string_view label = {}) const {
        uint64_t h = 1469598103934665603ULL;  // FNV offset
        auto mix = [&h](uint64_t x) {
            for (int i = 0; i < 8; ++i) {
                h ^= (x >> (8 * i)) & 0xff;
                h *= 1099511628211ULL;
            }
        };
        mix(state_);
        mix(inc_);
        mix(index);
        for (char c : label) {
            h ^= static_cast<unsigned char>(c);
            h *= 1099511628211ULL;
        }
        return Rng(h);
    }

    static uint64_t splitmix(uint64_t& x) {
        uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
    static uint64_t splitmix(uint64_t&& x) {
        uint64_t v = x;
        return splitmix(v);
    }

private:
    uint64_t state_ = 0;
    uint64_t inc_ = 1;
};

}  // namespace lar
