#pragma once

#include <cstdint>

#include "mkv/stats.hpp"

namespace mkv {

// splitmix64 step; used both as a generator for seeding and as a mixer.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// xoshiro256++ with per-particle seeding. Stream i is a pure function of
// (seed, stream_index), so simulations with different particle counts share
// the noise of their common particles and adding particles never reshuffles
// existing streams.
//
// Draw order per stream is part of the output contract (tests pin seeds):
// the initial-law sample first (when the law is random), then one Gaussian
// increment per fine Euler step, in time order. Gaussians come from the
// inverse-CDF applied to a uniform on (0,1).
class ParticleRng {
public:
    ParticleRng(std::uint64_t seed, std::uint64_t stream_index) {
        std::uint64_t s = seed ^ (0x9E3779B97F4A7C15ULL * (stream_index + 1));
        for (auto& word : state_) word = splitmix64(s);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform on the open interval (0,1): 53-bit mantissa, offset by half an ulp
    // so the inverse CDF never sees an endpoint.
    double next_uniform01() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double next_normal() { return normal_quantile(next_uniform01()); }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::uint64_t state_[4];
};

} // namespace mkv
