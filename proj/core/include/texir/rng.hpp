#pragma once

#include <cstdint>

namespace texir {

// Counter-based RNG. Every (seed, stream, counter) triple maps to an
// independent uniform; callers key streams by texel or pixel index so
// parallel work is reproducible regardless of scheduling.
class Rng {
public:
    Rng(uint64_t seed, uint64_t stream) : state_(mix(seed ^ mix(stream))), inc_(mix(stream) | 1) {}

    uint64_t next_u64() {
        state_ = mix(state_ + inc_);
        return state_;
    }

    // uniform in [0, 1)
    double next_double() {
        return double(next_u64() >> 11) * 0x1.0p-53;
    }

private:
    // splitmix64 finalizer
    static uint64_t mix(uint64_t z) {
        z += 0x9e3779b97f4a7c15ull;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    uint64_t state_;
    uint64_t inc_;
};

}  // namespace texir
