#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace fpca::rng {

// Counter-based pseudo-random stream built on the SplitMix64 output function.
// The i-th draw of a stream is a pure function of (key, i), so streams support
// random access and cheap, collision-resistant substream derivation.  All
// distributions below are implemented in-library (no std::*_distribution), so
// a given seed reproduces bit-identical output on every platform and compiler.
class Stream {
public:
    explicit Stream(std::uint64_t key) : key_(key) {}

    // Derives an independent child stream.  Children of distinct ids and
    // children of distinct parents do not collide in practice (the key space
    // is remixed through the full 64-bit avalanche).
    [[nodiscard]] Stream substream(std::uint64_t id) const {
        return Stream(mix(key_ ^ (0xd1b54a32d192ed03ULL * (id + 1))));
    }

    std::uint64_t next_u64() {
        std::uint64_t z = key_ + 0x9e3779b97f4a7c15ULL * (++counter_);
        return mix(z);
    }

    // Uniform on (0,1): 53 mantissa bits, offset half an ulp away from 0.
    double next_uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller; the pair partner is cached.
    double next_gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = next_uniform();
        const double u2 = next_uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace fpca::rng
