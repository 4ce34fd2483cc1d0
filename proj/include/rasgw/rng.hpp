#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace rasgw {

/// Deterministic counter-seeded random stream.
///
/// A stream is fully identified by (seed, stream_index): the same pair yields
/// the same sample sequence on every run and under any thread count. Parallel
/// code derives one stream per work item via substream(), so results never
/// depend on scheduling.
///
/// Substream derivation is plain index arithmetic, so two base streams whose
/// indices are closer than the number of work items they spawn will share
/// substreams. Space base indices accordingly (or vary the seed).
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_index)
        : seed_(seed), stream_index_(stream_index) {
        // splitmix64 over (seed, stream_index) fills the xoshiro256++ state.
        std::uint64_t x = seed ^ (stream_index * 0x9E3779B97F4A7C15ULL);
        for (auto& s : state_) {
            x += 0x9E3779B97F4A7C15ULL;
            std::uint64_t z = x;
            z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
            z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
            s = z ^ (z >> 31);
        }
        // All-zero state is unreachable for xoshiro; splitmix output of four
        // consecutive counters is never all zero, but guard anyway.
        if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_index() const { return stream_index_; }

    /// Stream for work item k, per the (seed, base_index + k) derivation rule.
    RngStream substream(std::uint64_t offset) const {
        return RngStream(seed_, stream_index_ + offset);
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

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform double in (0, 1]; safe as a log() argument.
    double uniform_pos() { return 1.0 - uniform(); }

    /// Uniform integer in [0, n), unbiased.
    std::uint64_t uniform_index(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("uniform_index: n must be positive");
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do { x = next_u64(); } while (x >= limit);
        return x % n;
    }

    bool coin_flip() { return (next_u64() >> 63) != 0; }

    /// Standard normal via Box-Muller (cosine branch).
    double gaussian() {
        const double u1 = uniform_pos();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }

    /// Gamma(shape, 1) via the Marsaglia-Tsang squeeze; shape < 1 boosted
    /// through Gamma(shape+1) * U^(1/shape).
    double gamma(double shape) {
        if (!(shape > 0.0)) throw std::invalid_argument("gamma: shape must be positive");
        if (shape < 1.0) {
            const double u = uniform_pos();
            return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = gaussian();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform_pos();
            const double x2 = x * x;
            if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
            if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    /// Beta(a, b) as a ratio of two gamma draws.
    double beta(double a, double b) {
        const double x = gamma(a);
        const double y = gamma(b);
        return x / (x + y);
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t seed_;
    std::uint64_t stream_index_;
    std::uint64_t state_[4];
};

}  // namespace rasgw
