#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace anaquest {

// One splitmix64 step; used only to derive substream seeds.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Seeded generator with fully specified transforms so that fixtures are
// stable across implementations: the bit stream is std::mt19937_64 (the
// algorithm is pinned by the standard), uniforms take the top 53 bits,
// normals use the basic Box-Muller form (two uniforms per draw), and
// bounded integers use 128-bit multiply-shift. Substreams for parallel
// work are derived with splitmix64 from (seed, stream index).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed), seed_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on [0, 1), 53-bit resolution.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Standard normal draw. Box-Muller on (1 - u1] keeps the log argument
    // strictly positive.
    double normal() {
        const double u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(1.0 - u1));
        return r * std::cos(2.0 * M_PI * u2);
    }

    // Uniform integer in [0, n). Multiply-shift; bias is 2^-64 and the
    // draw count is always exactly one u64.
    std::uint64_t below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    bool bernoulli(double p) { return uniform01() < p; }

    // Independent substream; deterministic in (seed, stream).
    Rng derive(std::uint64_t stream) const {
        std::uint64_t s = seed_ ^ (0x9E3779B97F4A7C15ULL * (stream + 1));
        return Rng(splitmix64_next(s));
    }

    std::uint64_t seed() const { return seed_; }

private:
    std::mt19937_64 engine_;
    std::uint64_t seed_;
};

}  // namespace anaquest
