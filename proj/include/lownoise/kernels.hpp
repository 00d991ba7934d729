#pragma once

#include <cstddef>
#include <functional>
#include <string>

namespace lownoise::kernels {

/// Arithmetic backends. Scalar is the reference implementation and is always
/// available; vector backends are selected at runtime from CPU capabilities
/// and must agree with scalar within summation-order rounding.
enum class Backend { scalar, avx2, neon };

/// Backend currently in use.
Backend active();

/// Force a backend (tests use this to compare scalar vs vector paths).
/// Throws if the backend is not supported on this machine.
void force(Backend b);

/// Reset to auto-detection.
void reset();

const char* backend_name(Backend b);
bool supported(Backend b);

// ----- level 1 -----

double dot(const double* a, const double* b, std::size_t n);

/// y += alpha * x
void axpy(double alpha, const double* x, double* y, std::size_t n);

/// Squared Euclidean distance.
double sqdist(const double* a, const double* b, std::size_t n);

double sum(const double* a, std::size_t n);

void scale(double alpha, double* x, std::size_t n);

// ----- level 3 (row-major) -----
// Shapes follow the batched-MLP layout: activations are (batch x features),
// weights are (out x in).

/// C(m x n) = A(m x k) * B(n x k)^T, i.e. C[i][j] = dot(A.row(i), B.row(j)).
/// accumulate: C += instead of C =.
void matmul_nt(const double* A, const double* B, double* C, std::size_t m, std::size_t k,
               std::size_t n, bool accumulate);

/// C(m x n) = A(m x k) * B(k x n).
void matmul_nn(const double* A, const double* B, double* C, std::size_t m, std::size_t k,
               std::size_t n, bool accumulate);

/// C(k x n) = A(m x k)^T * B(m x n).
void matmul_tn(const double* A, const double* B, double* C, std::size_t m, std::size_t k,
               std::size_t n, bool accumulate);

/// y(m) = A(m x k) * x
void matvec(const double* A, const double* x, double* y, std::size_t m, std::size_t k,
            bool accumulate);

/// y(k) += A(m x k)^T * u
void matvec_t(const double* A, const double* u, double* y, std::size_t m, std::size_t k,
              bool accumulate);

// ----- threading -----

/// Worker threads used by parallel_for (1 = run inline). Results never depend
/// on the thread count: work is split on a fixed grain and each chunk writes
/// only its own slots.
void set_threads(int n);
int threads();

/// Invoke fn(begin, end) over fixed-grain chunks of [0, n).
void parallel_for(std::size_t n, std::size_t grain, const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace lownoise::kernels
