#include "lownoise/linalg.hpp"

#include <cmath>

#include "lownoise/kernels.hpp"

namespace lownoise::linalg {

std::optional<Mat> cholesky(const Mat& a) {
    const std::size_t n = a.rows;
    Mat l(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = a(i, j) - kernels::dot(l.row(i), l.row(j), j);
            if (i == j) {
                if (s <= 0.0 || !std::isfinite(s)) return std::nullopt;
                l(i, i) = std::sqrt(s);
            } else {
                l(i, j) = s / l(j, j);
            }
        }
    }
    return l;
}

void solve_lower(const Mat& l, const double* b, double* y) {
    const std::size_t n = l.rows;
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i] - kernels::dot(l.row(i), y, i);
        y[i] = s / l(i, i);
    }
}

void solve_lower_t(const Mat& l, const double* b, double* x) {
    const std::size_t n = l.rows;
    for (std::size_t ii = n; ii-- > 0;) {
        double s = b[ii];
        for (std::size_t j = ii + 1; j < n; ++j) s -= l(j, ii) * x[j];
        x[ii] = s / l(ii, ii);
    }
}

void solve_spd(const Mat& l, const double* b, double* x) {
    Vec y(l.rows);
    solve_lower(l, b, y.data());
    solve_lower_t(l, y.data(), x);
}

double quad_form(const Mat& l, const double* r) {
    Vec y(l.rows);
    solve_lower(l, r, y.data());
    return kernels::dot(y.data(), y.data(), y.size());
}

Mat random_orthonormal_columns(std::size_t n, std::size_t k, Rng& rng) {
    // Modified Gram-Schmidt, run twice for orthogonality at working precision.
    Mat q(n, k, 0.0);
    std::vector<Vec> cols(k, Vec(n));
    for (std::size_t j = 0; j < k; ++j) rng.normal_fill(cols[j].data(), n);
    for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t j = 0; j < k; ++j) {
            for (std::size_t p = 0; p < j; ++p) {
                double proj = kernels::dot(cols[j].data(), cols[p].data(), n);
                kernels::axpy(-proj, cols[p].data(), cols[j].data(), n);
            }
            double norm = std::sqrt(kernels::dot(cols[j].data(), cols[j].data(), n));
            kernels::scale(1.0 / norm, cols[j].data(), n);
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < k; ++j) q(i, j) = cols[j][i];
    return q;
}

Mat random_orthogonal(std::size_t n, Rng& rng) { return random_orthonormal_columns(n, n, rng); }

void symmetrize(Mat& a) {
    for (std::size_t i = 0; i < a.rows; ++i) {
        for (std::size_t j = i + 1; j < a.cols; ++j) {
            double v = 0.5 * (a(i, j) + a(j, i));
            a(i, j) = v;
            a(j, i) = v;
        }
    }
}

Mat identity(std::size_t n) {
    Mat m(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Mat add_scaled_identity(const Mat& a, double s) {
    Mat m = a;
    for (std::size_t i = 0; i < m.rows; ++i) m(i, i) += s;
    return m;
}

double max_abs_asymmetry(const Mat& a) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = i + 1; j < a.cols; ++j)
            worst = std::max(worst, std::abs(a(i, j) - a(j, i)));
    return worst;
}

}  // namespace lownoise::linalg
