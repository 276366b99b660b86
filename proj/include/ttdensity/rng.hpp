#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace ttdensity {

/// Deterministic stream rng. Identical (seed, stream) pairs produce identical
/// sequences on every platform: the engine is seeded through a splitmix64
/// finalizer and doubles are built from raw bits instead of
/// std::uniform_real_distribution (whose output is implementation-defined).
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed, std::uint64_t stream = 0)
        : seed_(seed),
          engine_(mix(mix(seed + 0x9e3779b97f4a7c15ULL) ^
                      mix(stream + 0xbf58476d1ce4e5b9ULL))) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    /// Standard normal via Box-Muller (pairs cached).
    double normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_normal_;
        }
        // u1 in (0, 1] so the log is finite
        double u1 = 1.0 - uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double angle = 6.283185307179586476925287 * u2;
        cached_normal_ = r * std::sin(angle);
        has_cached_ = true;
        return r * std::cos(angle);
    }

    /// Independent substream sharing this rng's seed, e.g. one per layer.
    SeededRng substream(std::uint64_t stream) const {
        return SeededRng(seed_, stream);
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t seed_;
    std::mt19937_64 engine_;
    double cached_normal_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace ttdensity
