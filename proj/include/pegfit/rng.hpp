#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace pegfit {

// Deterministic counter-free PRNG built on splitmix64. Streams derived from
// (seed, tags...) are independent of worker count and call-site ordering,
// which is what makes dataset generation reproducible under parallelism.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : state_(mix(seed ^ 0x9e3779b97f4a7c15ULL)) {}

    static RngStream derive(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) {
        std::uint64_t s = mix(seed ^ 0xd6e8feb86659fd93ULL);
        for (std::uint64_t t : tags) s = mix(s ^ mix(t + 0x632be59bd9b4e019ULL));
        return RngStream(s);
    }

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix(state_);
    }

    // [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Box-Muller, one value per call (no cached second draw so the stream
    // advances identically no matter how results are consumed).
    double gaussian() {
        double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }

    // Marsaglia-Tsang, shape >= 1.
    double gamma(double shape) {
        double d = shape - 1.0 / 3.0;
        double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x = gaussian();
            double t = 1.0 + c * x;
            if (t <= 0.0) continue;
            double v = t * t * t;
            double u = uniform();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
};

}  // namespace pegfit
