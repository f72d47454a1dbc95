#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>

namespace spintwa {

/// Philox4x32-10 counter-based generator. Each (seed, stream, domain) triple
/// owns an independent sequence, so trajectory streams are reproducible
/// regardless of worker scheduling.
class Philox {
public:
    struct Block {
        uint32_t v[4];
    };

    static Block generate(uint64_t seed, uint64_t stream, uint32_t domain, uint32_t counter) {
        uint32_t c0 = counter;
        uint32_t c1 = static_cast<uint32_t>(stream);
        uint32_t c2 = static_cast<uint32_t>(stream >> 32);
        uint32_t c3 = domain;
        uint32_t k0 = static_cast<uint32_t>(seed);
        uint32_t k1 = static_cast<uint32_t>(seed >> 32);
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                k0 += 0x9E3779B9u;
                k1 += 0xBB67AE85u;
            }
            const uint64_t p0 = static_cast<uint64_t>(0xD2511F53u) * c0;
            const uint64_t p1 = static_cast<uint64_t>(0xCD9E8D57u) * c2;
            const uint32_t hi0 = static_cast<uint32_t>(p0 >> 32);
            const uint32_t lo0 = static_cast<uint32_t>(p0);
            const uint32_t hi1 = static_cast<uint32_t>(p1 >> 32);
            const uint32_t lo1 = static_cast<uint32_t>(p1);
            const uint32_t n0 = hi1 ^ c1 ^ k0;
            const uint32_t n1 = lo1;
            const uint32_t n2 = hi0 ^ c3 ^ k1;
            const uint32_t n3 = lo0;
            c0 = n0;
            c1 = n1;
            c2 = n2;
            c3 = n3;
        }
        return Block{{c0, c1, c2, c3}};
    }
};

/// Buffered stream of uniforms/normals/gammas drawn from one Philox stream.
class RngStream {
public:
    // Domains keep independent parts of a trajectory's randomness apart.
    static constexpr uint32_t kDomainInitial = 0;
    static constexpr uint32_t kDomainDynamics = 1;

    RngStream(uint64_t seed, uint64_t stream, uint32_t domain)
        : seed_(seed), stream_(stream), domain_(domain) {}

    uint32_t next_u32() {
        if (pos_ == 4) {
            block_ = Philox::generate(seed_, stream_, domain_, counter_++);
            pos_ = 0;
        }
        return block_.v[pos_++];
    }

    /// Uniform on (0, 1]; never returns 0, so log() is safe.
    double uniform() {
        const uint64_t hi = next_u32();
        const uint64_t lo = next_u32();
        const uint64_t bits = (hi << 32) | lo;
        return static_cast<double>((bits >> 11) + 1) * 0x1.0p-53;
    }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double phase = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(phase);
        have_spare_ = true;
        return r * std::cos(phase);
    }

    /// Gamma(shape, 1) via Marsaglia-Tsang; requires shape >= 1.
    double gamma(double shape) {
        if (shape < 1.0) throw std::invalid_argument("gamma: shape must be >= 1");
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / (3.0 * std::sqrt(d));
        for (;;) {
            const double x = normal();
            const double t = 1.0 + c * x;
            if (t <= 0.0) continue;
            const double v = t * t * t;
            const double u = uniform();
            const double x2 = x * x;
            if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
            if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

private:
    uint64_t seed_;
    uint64_t stream_;
    uint32_t domain_;
    uint32_t counter_ = 0;
    Philox::Block block_{};
    int pos_ = 4;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace spintwa
