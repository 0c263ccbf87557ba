#pragma once

#include <cstdint>
#include <random>

namespace rednet {

// Deterministic random source. mt19937_64 supplies the raw bits; every
// distribution on top of it is implemented here by hand so that the exact
// value stream does not depend on the standard library in use.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1): top 53 bits of one engine draw.
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Unbiased integer in [0, n) by rejection sampling; n must be > 0.
    std::uint64_t uniform_index(std::uint64_t n);

    // Standard normal via the Box-Muller transform (cosine branch, one
    // normal per two uniform draws; nothing is cached between calls).
    double normal();

private:
    std::mt19937_64 engine_;
};

// Mixes a base seed with a stream id into an unrelated seed, so that
// independent consumers (dataset build, weight init, batch sampling, per
// image noise) can share one user-facing seed without sharing a stream.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace rednet
