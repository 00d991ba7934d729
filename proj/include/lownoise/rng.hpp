#pragma once

#include <cstdint>
#include <string_view>

#include "lownoise/common.hpp"

namespace lownoise {

/// 64-bit FNV-1a over a byte string.
std::uint64_t fnv1a64(std::string_view bytes);

/// SplitMix64 finalizer; bijective on 64-bit values.
std::uint64_t mix64(std::uint64_t x);

/// Stable seed derivation: hash64(master, label, index).
/// Adding new (label, index) pairs never perturbs existing derived seeds.
std::uint64_t derive_seed(std::uint64_t master, std::string_view label, std::uint64_t index = 0);

/// Counter-style generator: the i-th output is a pure function of (seed, i).
/// No global state; every consumer owns its own instance.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        return mix64(state_);
    }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller with a cached spare.
    double normal();

    void normal_fill(double* out, std::size_t n);
    Vec normal_vec(std::size_t n);

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace lownoise
