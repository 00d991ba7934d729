#pragma once

#include <cstddef>

namespace lownoise::kernels {

/// Internal: one entry per level-1 kernel. Each backend TU provides a table.
struct Vtable {
    double (*dot)(const double*, const double*, std::size_t);
    void (*axpy)(double, const double*, double*, std::size_t);
    double (*sqdist)(const double*, const double*, std::size_t);
    double (*sum)(const double*, std::size_t);
    void (*scale)(double, double*, std::size_t);
    // Register-blocked variants feeding the matmul loops: one pass over `a`
    // against four rows of B, and four accumulated axpys in one pass over y.
    void (*dot4)(const double* a, const double* b0, const double* b1, const double* b2,
                 const double* b3, std::size_t n, double* out4);
    void (*axpy4)(const double* alphas, const double* x0, const double* x1, const double* x2,
                  const double* x3, double* y, std::size_t n);
};

}  // namespace lownoise::kernels
