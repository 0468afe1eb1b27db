// Copyright 2026-present the fraglab project
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <span>
#include <vector>

// Small dense linear algebra on top of the vector kernels. Everything here
// assumes modest column counts (designs have 1+k or 1+J*k columns); row
// counts can be large, so the column-major layout keeps the per-column
// kernels on contiguous memory.

namespace fraglab::linalg {

using Vector = std::vector<double>;

class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[j * rows_ + i]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[j * rows_ + i]; }

    double* col(std::size_t j) { return data_.data() + j * rows_; }
    const double* col(std::size_t j) const { return data_.data() + j * rows_; }
    std::span<double> col_span(std::size_t j) { return {col(j), rows_}; }
    std::span<const double> col_span(std::size_t j) const { return {col(j), rows_}; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    void set_col(std::size_t j, std::span<const double> v);

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// a' * b
Matrix transpose_times(const Matrix& a, const Matrix& b);
// a' * y
Vector transpose_times(const Matrix& a, const Vector& y);
// a * b
Matrix multiply(const Matrix& a, const Matrix& b);
// a * x
Vector multiply(const Matrix& a, const Vector& x);
// a' * diag(w) * b
Matrix weighted_cross(const Matrix& a, const Vector& w, const Matrix& b);
// a' * diag(w) * y
Vector weighted_cross(const Matrix& a, const Vector& w, const Vector& y);

Matrix add(const Matrix& a, const Matrix& b);
Matrix subtract(const Matrix& a, const Matrix& b);
Matrix scale(Matrix a, double s);
Vector add(const Vector& a, const Vector& b);
Vector subtract(const Vector& a, const Vector& b);
Vector scale(Vector a, double s);

double max_abs(const Vector& v);
double max_abs_diff(const Matrix& a, const Matrix& b);

// Inverse of a symmetric positive definite matrix via Cholesky; the result is
// explicitly symmetrized. Throws SingularDesignError when the factorization
// breaks down.
Matrix spd_inverse(const Matrix& a);

// Solves a * x = b for SPD a with multiple right-hand sides (columns of b).
Matrix spd_solve(const Matrix& a, const Matrix& b);
Vector spd_solve(const Matrix& a, const Vector& b);

// Singular values in decreasing order via one-sided Jacobi. Intended for the
// small triangular factors produced by the least-squares path.
Vector singular_values(Matrix a);

// Householder QR least squares. Factorizes once; solve() can then be applied
// to many right-hand sides, which is what the Monte Carlo engine leans on
// (the design is fixed across replications, only the response changes).
//
// Rank policy: smallest singular value of R below rank_tol times the largest
// is treated as rank deficiency and raises SingularDesignError. No silent
// pseudo-inverse.
class LeastSquares {
public:
    explicit LeastSquares(const Matrix& x, double rank_tol = 1e-10);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    // Coefficient vector for response y.
    Vector solve(const Vector& y) const;
    // Residual sum of squares for response y (norm of the rejected component).
    double residual_ss(const Vector& y) const;
    // Both in one pass over the factorization.
    Vector solve(const Vector& y, double& rss) const;

    // (X'X)^{-1} = R^{-1} R^{-T}
    Matrix xtx_inverse() const;

    const Vector& sigma() const { return sigma_; }
    double condition_number() const;

private:
    void apply_qt(Vector& v) const;

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    Matrix qr_;      // Householder vectors below the diagonal, R on and above
    Vector beta_;    // reflector scales
    Vector sigma_;   // singular values of R, decreasing
};

}  // namespace fraglab::linalg
