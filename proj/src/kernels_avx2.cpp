// AVX2 + FMA variants of the level-1 kernels. Compiled with -mavx2 -mfma and
// reached only through the runtime dispatch in kernels.cpp, so the rest of the
// project stays buildable for any x86-64 baseline.

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cstddef>

#include "kernels_vtable.hpp"

namespace lownoise::kernels {

namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d sh = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    }
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
    __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vy = _mm256_loadu_pd(y + i);
        vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
        _mm256_storeu_pd(y + i, vy);
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

double sqdist_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        acc = _mm256_fmadd_pd(d, d, acc);
    }
    double s = hsum(acc);
    for (; i < n; ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

double sum_avx2(const double* a, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(a + i));
    double s = hsum(acc);
    for (; i < n; ++i) s += a[i];
    return s;
}

void scale_avx2(double alpha, double* x, std::size_t n) {
    __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
    }
    for (; i < n; ++i) x[i] *= alpha;
}

void dot4_avx2(const double* a, const double* b0, const double* b1, const double* b2,
               const double* b3, std::size_t n, double* out4) {
    __m256d s0 = _mm256_setzero_pd();
    __m256d s1 = _mm256_setzero_pd();
    __m256d s2 = _mm256_setzero_pd();
    __m256d s3 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d va = _mm256_loadu_pd(a + i);
        s0 = _mm256_fmadd_pd(va, _mm256_loadu_pd(b0 + i), s0);
        s1 = _mm256_fmadd_pd(va, _mm256_loadu_pd(b1 + i), s1);
        s2 = _mm256_fmadd_pd(va, _mm256_loadu_pd(b2 + i), s2);
        s3 = _mm256_fmadd_pd(va, _mm256_loadu_pd(b3 + i), s3);
    }
    out4[0] = hsum(s0);
    out4[1] = hsum(s1);
    out4[2] = hsum(s2);
    out4[3] = hsum(s3);
    for (; i < n; ++i) {
        double ai = a[i];
        out4[0] += ai * b0[i];
        out4[1] += ai * b1[i];
        out4[2] += ai * b2[i];
        out4[3] += ai * b3[i];
    }
}

void axpy4_avx2(const double* alphas, const double* x0, const double* x1, const double* x2,
                const double* x3, double* y, std::size_t n) {
    __m256d a0 = _mm256_set1_pd(alphas[0]);
    __m256d a1 = _mm256_set1_pd(alphas[1]);
    __m256d a2 = _mm256_set1_pd(alphas[2]);
    __m256d a3 = _mm256_set1_pd(alphas[3]);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vy = _mm256_loadu_pd(y + i);
        vy = _mm256_fmadd_pd(a0, _mm256_loadu_pd(x0 + i), vy);
        vy = _mm256_fmadd_pd(a1, _mm256_loadu_pd(x1 + i), vy);
        vy = _mm256_fmadd_pd(a2, _mm256_loadu_pd(x2 + i), vy);
        vy = _mm256_fmadd_pd(a3, _mm256_loadu_pd(x3 + i), vy);
        _mm256_storeu_pd(y + i, vy);
    }
    for (; i < n; ++i) {
        y[i] += alphas[0] * x0[i] + alphas[1] * x1[i] + alphas[2] * x2[i] + alphas[3] * x3[i];
    }
}

}  // namespace

extern const Vtable kAvx2Vtable{dot_avx2, axpy_avx2,  sqdist_avx2, sum_avx2,
                                scale_avx2, dot4_avx2, axpy4_avx2};

}  // namespace lownoise::kernels

#endif  // x86-64
