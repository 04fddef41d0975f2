#pragma once

#include <cmath>
#include <cstdint>

namespace sptest {

/// SplitMix64 step; used both as a standalone mixer and to seed streams.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Derives a child seed from (master, a, b); shares the mixing chain used by
/// Rng::substream so seed arithmetic stays in one place.
inline std::uint64_t splitmix64_mix(std::uint64_t master, std::uint64_t a,
                                    std::uint64_t b = 0) {
    std::uint64_t sm = master;
    std::uint64_t h = splitmix64(sm);
    sm = h ^ (a + 0x9e3779b97f4a7c15ULL);
    h = splitmix64(sm);
    sm = h ^ (b + 0xd1b54a32d192ed03ULL);
    return splitmix64(sm);
}

/// xoshiro256++ with deterministic Box-Muller normals.
///
/// Every stream is a pure function of the 64-bit seeds fed to `substream`,
/// so a (master seed, trial, part) triple always regenerates identical
/// draws regardless of how trials are scheduled.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : state_) word = splitmix64(sm);
    }

    /// Derives an independent stream from (master, a, b) by mixing the
    /// three words through SplitMix64 before seeding.
    static Rng substream(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) {
        return Rng(splitmix64_mix(master, a, b));
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

    /// Uniform in (0,1), 53-bit mantissa, never exactly 0.
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller (pair cached).
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 6.283185307179586476925286766559 * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t state_[4] = {};
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace sptest
