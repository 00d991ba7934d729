#include "lownoise/rng.hpp"

#include <cmath>

namespace lownoise {

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t mix64(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBULL;
    x ^= x >> 31;
    return x;
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view label, std::uint64_t index) {
    return mix64(mix64(master ^ fnv1a64(label)) ^ index);
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    // Box-Muller on (0, 1] x [0, 1).
    double u1 = 1.0 - uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
}

void Rng::normal_fill(double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = normal();
}

Vec Rng::normal_vec(std::size_t n) {
    Vec v(n);
    normal_fill(v.data(), n);
    return v;
}

std::uint64_t Rng::below(std::uint64_t n) {
    // Rejection-free modulo bias is negligible for the n used here (<= 2^20),
    // but keep it exact anyway.
    std::uint64_t threshold = (0ULL - n) % n;
    for (;;) {
        std::uint64_t r = next_u64();
        if (r >= threshold) return r % n;
    }
}

}  // namespace lownoise
