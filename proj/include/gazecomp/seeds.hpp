#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace gazecomp {

// Splittable seeding: every consumer derives its stream as
// derive_seed(root, purpose_tag, index). Adding new consumers or growing an
// index range never perturbs the streams of existing ones.
uint64_t derive_seed(uint64_t root, std::string_view purpose, uint64_t index = 0);

// Deterministic RNG. Distributions are implemented by hand on top of the
// mt19937_64 bit stream so sampled values do not depend on the standard
// library's distribution internals.
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1).
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Uniform integer in [lo, hi] inclusive.
    int64_t uniform_int(int64_t lo, int64_t hi);

    // Standard normal via Box-Muller.
    double normal();

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    bool bernoulli(double p) { return uniform01() < p; }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace gazecomp
