#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "mcgrad/errors.hpp"

namespace mcgrad {

// Order-independent reduction: fixed pairwise tree that depends only on the
// length, never on how the buffer was filled.
inline double pairwise_sum(std::span<const double> v) {
    const std::size_t n = v.size();
    if (n <= 32) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(v.subspan(0, half)) + pairwise_sum(v.subspan(half));
}

// Central difference with cube-root-of-epsilon step scaling.
inline double central_diff(const std::function<double(double)>& f, double x,
                           double scale = 1.0) {
    const double h = std::cbrt(2.2204460492503131e-16) * std::max(1.0, std::abs(scale));
    // Round the step so x+h and x-h differ by exactly 2h.
    volatile double xph = x + h;
    const double hh = xph - x;
    return (f(x + hh) - f(x - hh)) / (2.0 * hh);
}

// Central difference with an explicit step (for theta-derivative cross-checks).
inline double central_diff_h(const std::function<double(double)>& f, double x,
                             double h) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

// Minimal dense row-major matrix; big enough for d x |theta| Jacobians.
struct Mat {
    int rows = 0, cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}

    double& at(int r, int c) { return a[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return a[static_cast<std::size_t>(r) * cols + c]; }

    std::vector<double> col(int c) const {
        std::vector<double> out(rows);
        for (int r = 0; r < rows; ++r) out[r] = at(r, c);
        return out;
    }
};

// Solves A x = b by Gaussian elimination with partial pivoting. A is square
// and small (sampling dimension). Throws DomainError on a singular system.
inline std::vector<double> solve_linear(Mat A, std::vector<double> b) {
    const int n = A.rows;
    if (A.cols != n || static_cast<int>(b.size()) != n)
        throw ConfigError("solve_linear: dimension mismatch");
    for (int k = 0; k < n; ++k) {
        int piv = k;
        for (int r = k + 1; r < n; ++r)
            if (std::abs(A.at(r, k)) > std::abs(A.at(piv, k))) piv = r;
        if (std::abs(A.at(piv, k)) < 1e-300)
            throw DomainError("solve_linear: singular Jacobian");
        if (piv != k) {
            for (int c = 0; c < n; ++c) std::swap(A.at(k, c), A.at(piv, c));
            std::swap(b[k], b[piv]);
        }
        for (int r = k + 1; r < n; ++r) {
            const double f = A.at(r, k) / A.at(k, k);
            for (int c = k; c < n; ++c) A.at(r, c) -= f * A.at(k, c);
            b[r] -= f * b[k];
        }
    }
    std::vector<double> x(n);
    for (int r = n - 1; r >= 0; --r) {
        double s = b[r];
        for (int c = r + 1; c < n; ++c) s -= A.at(r, c) * x[c];
        x[r] = s / A.at(r, r);
    }
    return x;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace mcgrad
