#pragma once

#include <cstdint>

#include "srdiff/tensor.hpp"

namespace srdiff {

/// Counter-based deterministic generator: draw i is splitmix64 applied to
/// seed + i * golden-ratio increment, so the full state is (seed, counter)
/// and serializes to two integers. Normal variates use a fresh Box-Muller
/// pair per call (no cached spare), keeping restore exact.
class Rng {
public:
    explicit Rng(uint64_t seed) : seed_(seed), counter_(0) {}

    static Rng restore(uint64_t seed, uint64_t counter) {
        Rng r(seed);
        r.counter_ = counter;
        return r;
    }

    uint64_t next_u64();

    /// Uniform on the open interval (0, 1).
    double uniform();

    /// Standard normal variate.
    float normal();

    Tensor normal_tensor(std::vector<int> shape);

    /// Uniform integer on [lo, hi] inclusive.
    int uniform_int(int lo, int hi);

    uint64_t seed() const { return seed_; }
    uint64_t counter() const { return counter_; }

private:
    uint64_t seed_;
    uint64_t counter_;
};

}  // namespace srdiff
