#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "driftlab/errors.hpp"

namespace driftlab {

/// Dense row-major n x n matrix, sized for the (d+1)-dimensional phase
/// problems of this library (n rarely exceeds 4).
struct SmallMat {
    std::size_t n = 0;
    std::vector<double> a;  // row-major

    SmallMat() = default;
    explicit SmallMat(std::size_t n_) : n(n_), a(n_ * n_, 0.0) {}
    double& operator()(std::size_t i, std::size_t j) { return a[i * n + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a[i * n + j]; }

    double max_abs() const {
        double m = 0.0;
        for (double x : a) m = std::max(m, std::fabs(x));
        return m;
    }
};

/// Solve A x = b by LU with partial pivoting; throws Error on (near-)singular A.
inline std::vector<double> lu_solve(SmallMat A, std::vector<double> b) {
    std::size_t n = A.n;
    if (b.size() != n) throw ConfigError("lu_solve: dimension mismatch");
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::fabs(A(i, k)) > std::fabs(A(piv, k))) piv = i;
        if (std::fabs(A(piv, k)) < 1e-300) throw Error("lu_solve: singular matrix");
        if (piv != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(A(k, j), A(piv, j));
            std::swap(b[k], b[piv]);
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            double m = A(i, k) / A(k, k);
            for (std::size_t j = k + 1; j < n; ++j) A(i, j) -= m * A(k, j);
            b[i] -= m * b[k];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t j = i + 1; j < n; ++j) s -= A(i, j) * x[j];
        x[i] = s / A(i, i);
    }
    return x;
}

/// Attempt a Cholesky factorization; returns false when A is not positive
/// definite (within a small diagonal tolerance).
inline bool cholesky_spd(const SmallMat& A, SmallMat& L) {
    std::size_t n = A.n;
    L = SmallMat(n);
    double scale = std::max(A.max_abs(), 1e-300);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = A(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= L(i, k) * L(j, k);
            if (i == j) {
                if (s <= 1e-14 * scale) return false;
                L(i, i) = std::sqrt(s);
            } else {
                L(i, j) = s / L(j, j);
            }
        }
    }
    return true;
}

/**
 * Eigenvalues of a symmetric matrix by the cyclic Jacobi method, returned
 * in ascending order.  Quadratically convergent; plenty for the tiny
 * Hessians and Gram matrices that show up here.
 */
inline std::vector<double> jacobi_eigenvalues(SmallMat A, int max_sweeps = 64) {
    std::size_t n = A.n;
    if (n == 0) return {};
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += A(i, j) * A(i, j);
        if (off <= 1e-30 * std::max(1.0, A.max_abs() * A.max_abs())) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (A(p, q) == 0.0) continue;
                double theta = (A(q, q) - A(p, p)) / (2.0 * A(p, q));
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    double akp = A(k, p), akq = A(k, q);
                    A(k, p) = c * akp - s * akq;
                    A(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double apk = A(p, k), aqk = A(q, k);
                    A(p, k) = c * apk - s * aqk;
                    A(q, k) = s * apk + c * aqk;
                }
            }
        }
    }
    std::vector<double> ev(n);
    for (std::size_t i = 0; i < n; ++i) ev[i] = A(i, i);
    std::sort(ev.begin(), ev.end());
    return ev;
}

}  // namespace driftlab
