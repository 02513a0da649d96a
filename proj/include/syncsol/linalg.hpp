#pragma once

#include <cstddef>
#include <vector>

#include "syncsol/common.hpp"

namespace syncsol {

/// Minimal dense square-capable matrix, row-major, value semantics.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> data_;
};

namespace detail {

struct Lu {
    Matrix lu;
    std::vector<std::size_t> piv;
    int sign = 1;
    bool singular = false;
    double max_abs = 0.0;
};

inline Lu lu_factor(Matrix a, double pivot_tol) {
    const std::size_t n = a.rows();
    Lu f{std::move(a), std::vector<std::size_t>(n), 1, false, 0.0};
    for (std::size_t i = 0; i < n; ++i) f.piv[i] = i;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            f.max_abs = std::max(f.max_abs, std::fabs(f.lu(i, j)));

    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::fabs(f.lu(i, k)) > std::fabs(f.lu(p, k))) p = i;
        if (p != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(f.lu(k, j), f.lu(p, j));
            std::swap(f.piv[k], f.piv[p]);
            f.sign = -f.sign;
        }
        if (std::fabs(f.lu(k, k)) <= pivot_tol * std::max(1.0, f.max_abs)) {
            f.singular = true;
            return f;
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            f.lu(i, k) /= f.lu(k, k);
            for (std::size_t j = k + 1; j < n; ++j)
                f.lu(i, j) -= f.lu(i, k) * f.lu(k, j);
        }
    }
    return f;
}

inline std::vector<double> lu_solve(const Lu& f, const std::vector<double>& b) {
    const std::size_t n = f.lu.rows();
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = b[f.piv[i]];
    for (std::size_t i = 1; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) x[i] -= f.lu(i, j) * x[j];
    for (std::size_t i = n; i-- > 0;) {
        for (std::size_t j = i + 1; j < n; ++j) x[i] -= f.lu(i, j) * x[j];
        x[i] /= f.lu(i, i);
    }
    return x;
}

} // namespace detail

inline double determinant(const Matrix& a, double pivot_tol = 0.0) {
    auto f = detail::lu_factor(a, pivot_tol);
    if (f.singular) return 0.0;
    double d = f.sign;
    for (std::size_t i = 0; i < a.rows(); ++i) d *= f.lu(i, i);
    return d;
}

/// Solve A x = b by partial-pivot elimination.
inline std::vector<double> solve_linear(const Matrix& a, const std::vector<double>& b,
                                        double pivot_tol = 1e-14) {
    auto f = detail::lu_factor(a, pivot_tol);
    if (f.singular) fail(errc::singular, "linear solve hit a vanishing pivot");
    return detail::lu_solve(f, b);
}

inline Matrix inverse(const Matrix& a, double pivot_tol = 1e-14) {
    const std::size_t n = a.rows();
    auto f = detail::lu_factor(a, pivot_tol);
    if (f.singular) fail(errc::singular, "matrix is numerically singular");
    Matrix inv(n, n);
    std::vector<double> e(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        e[j] = 1.0;
        auto col = detail::lu_solve(f, e);
        for (std::size_t i = 0; i < n; ++i) inv(i, j) = col[i];
        e[j] = 0.0;
    }
    return inv;
}

} // namespace syncsol
