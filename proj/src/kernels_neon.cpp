// NEON variants of the level-1 kernels (aarch64 only). Mirrors the AVX2 file;
// selected at runtime by kernels.cpp.

#if defined(__aarch64__)

#include <arm_neon.h>

#include <cstddef>

#include "kernels_vtable.hpp"

namespace lownoise::kernels {

namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
        acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
    }
    for (; i + 2 <= n; i += 2) {
        acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    }
    double s = vaddvq_f64(acc0) + vaddvq_f64(acc1);
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
    float64x2_t va = vdupq_n_f64(alpha);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        float64x2_t vy = vld1q_f64(y + i);
        vy = vfmaq_f64(vy, va, vld1q_f64(x + i));
        vst1q_f64(y + i, vy);
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

double sqdist_neon(const double* a, const double* b, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        float64x2_t d = vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
        acc = vfmaq_f64(acc, d, d);
    }
    double s = vaddvq_f64(acc);
    for (; i < n; ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

double sum_neon(const double* a, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vld1q_f64(a + i));
    double s = vaddvq_f64(acc);
    for (; i < n; ++i) s += a[i];
    return s;
}

void scale_neon(double alpha, double* x, std::size_t n) {
    float64x2_t va = vdupq_n_f64(alpha);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(x + i, vmulq_f64(va, vld1q_f64(x + i)));
    }
    for (; i < n; ++i) x[i] *= alpha;
}

void dot4_neon(const double* a, const double* b0, const double* b1, const double* b2,
               const double* b3, std::size_t n, double* out4) {
    float64x2_t s0 = vdupq_n_f64(0.0);
    float64x2_t s1 = vdupq_n_f64(0.0);
    float64x2_t s2 = vdupq_n_f64(0.0);
    float64x2_t s3 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        float64x2_t va = vld1q_f64(a + i);
        s0 = vfmaq_f64(s0, va, vld1q_f64(b0 + i));
        s1 = vfmaq_f64(s1, va, vld1q_f64(b1 + i));
        s2 = vfmaq_f64(s2, va, vld1q_f64(b2 + i));
        s3 = vfmaq_f64(s3, va, vld1q_f64(b3 + i));
    }
    out4[0] = vaddvq_f64(s0);
    out4[1] = vaddvq_f64(s1);
    out4[2] = vaddvq_f64(s2);
    out4[3] = vaddvq_f64(s3);
    for (; i < n; ++i) {
        double ai = a[i];
        out4[0] += ai * b0[i];
        out4[1] += ai * b1[i];
        out4[2] += ai * b2[i];
        out4[3] += ai * b3[i];
    }
}

void axpy4_neon(const double* alphas, const double* x0, const double* x1, const double* x2,
                const double* x3, double* y, std::size_t n) {
    float64x2_t a0 = vdupq_n_f64(alphas[0]);
    float64x2_t a1 = vdupq_n_f64(alphas[1]);
    float64x2_t a2 = vdupq_n_f64(alphas[2]);
    float64x2_t a3 = vdupq_n_f64(alphas[3]);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        float64x2_t vy = vld1q_f64(y + i);
        vy = vfmaq_f64(vy, a0, vld1q_f64(x0 + i));
        vy = vfmaq_f64(vy, a1, vld1q_f64(x1 + i));
        vy = vfmaq_f64(vy, a2, vld1q_f64(x2 + i));
        vy = vfmaq_f64(vy, a3, vld1q_f64(x3 + i));
        vst1q_f64(y + i, vy);
    }
    for (; i < n; ++i) {
        y[i] += alphas[0] * x0[i] + alphas[1] * x1[i] + alphas[2] * x2[i] + alphas[3] * x3[i];
    }
}

}  // namespace

extern const Vtable kNeonVtable{dot_neon, axpy_neon,  sqdist_neon, sum_neon,
                                scale_neon, dot4_neon, axpy4_neon};

}  // namespace lownoise::kernels

#endif  // aarch64
