#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>

namespace cvqnet {

/// Counter-based pseudorandom stream. Every draw is a pure function of
/// (key, counter), so streams can be forked deterministically and replayed
/// independently of evaluation order. There is no global RNG state anywhere
/// in the library; every stochastic operation takes an explicit stream.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0)
        : key_(mix(seed ^ 0x736f6d6570736575ULL, stream)) {}

    std::uint64_t next_u64() { return mix(key_, counter_++); }

    /// Uniform on (0, 1]. Never returns 0, so log() of the result is safe.
    double uniform() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    /// Standard normal deviate (Box-Muller; the paired value is cached).
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u = uniform();
        const double v = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u));
        const double angle = 2.0 * std::numbers::pi * v;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    double normal(double mean, double variance) {
        if (!(variance >= 0.0)) {
            throw std::invalid_argument("RngStream::normal: variance must be >= 0");
        }
        return mean + std::sqrt(variance) * normal();
    }

    /// Independent child stream. Monte Carlo trials derive one substream per
    /// trial index so that results do not depend on scheduling order.
    RngStream substream(std::uint64_t index) const {
        RngStream child(0);
        child.key_ = mix(key_, 0x9e3779b97f4a7c15ULL + index);
        child.counter_ = 0;
        child.has_spare_ = false;
        return child;
    }

private:
    static std::uint64_t splitmix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xbf58476d1ce4e5b9ULL;
        z ^= z >> 27;
        z *= 0x94d049bb133111ebULL;
        z ^= z >> 31;
        return z;
    }

    static std::uint64_t mix(std::uint64_t key, std::uint64_t word) {
        return splitmix(key + 0x9e3779b97f4a7c15ULL * (word + 1));
    }

    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace cvqnet
