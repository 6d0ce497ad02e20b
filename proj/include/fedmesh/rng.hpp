#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace fedmesh {

// Distributions below are hand-rolled on top of mt19937_64 because the
// std:: distributions are implementation-defined; draws here are bit-stable
// across platforms and standard libraries.
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 random bits.
    double next_unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Uniform in [0, bound). bound must be > 0. Slight modulo bias is
    // irrelevant for batch sampling and keeps the draw single-shot.
    int next_int(int bound) { return static_cast<int>(engine_() % static_cast<uint64_t>(bound)); }

    double next_range(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

    // Standard normal via Box-Muller; consumes exactly two uniforms per call.
    double next_normal() {
        double u1 = next_unit();
        double u2 = next_unit();
        while (u1 <= 0.0) u1 = next_unit();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::mt19937_64 engine_;
};

inline uint64_t splitmix64(uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Folds a tuple of identifiers into one seed. Used for named streams such as
// (run seed, silo, step counter) so that two algorithms replaying the same
// step see identical draws.
inline uint64_t mix_seed(uint64_t a, uint64_t b = 0, uint64_t c = 0, uint64_t d = 0) {
    uint64_t s = a;
    uint64_t out = splitmix64(s);
    s ^= b;
    out ^= splitmix64(s);
    s ^= c;
    out ^= splitmix64(s);
    s ^= d;
    out ^= splitmix64(s);
    return out;
}

inline Rng stream_for(uint64_t seed, uint64_t a, uint64_t b = 0, uint64_t c = 0) {
    return Rng(mix_seed(seed, a, b, c));
}

}  // namespace fedmesh
