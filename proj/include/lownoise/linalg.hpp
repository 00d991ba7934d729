#pragma once

#include <optional>

#include "lownoise/common.hpp"
#include "lownoise/rng.hpp"

namespace lownoise::linalg {

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
/// Returns nullopt if the matrix is not numerically positive definite.
std::optional<Mat> cholesky(const Mat& a);

/// Solve L y = b with L lower triangular (forward substitution).
void solve_lower(const Mat& l, const double* b, double* y);

/// Solve L^T x = b (backward substitution).
void solve_lower_t(const Mat& l, const double* b, double* x);

/// Solve (L L^T) x = b.
void solve_spd(const Mat& l, const double* b, double* x);

/// ||L^{-1} r||^2, the Mahalanobis quadratic form.
double quad_form(const Mat& l, const double* r);

/// Random orthogonal matrix: Gram-Schmidt Q of a Gaussian matrix with
/// positive-diagonal R convention, deterministic given the rng.
Mat random_orthogonal(std::size_t n, Rng& rng);

/// Random matrix with orthonormal columns, n x k.
Mat random_orthonormal_columns(std::size_t n, std::size_t k, Rng& rng);

/// (A + A^T) / 2
void symmetrize(Mat& a);

Mat identity(std::size_t n);

/// a + s * I
Mat add_scaled_identity(const Mat& a, double s);

double max_abs_asymmetry(const Mat& a);

}  // namespace lownoise::linalg
