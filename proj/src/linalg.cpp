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

#include "fraglab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fraglab/errors.hpp"
#include "fraglab/kernels.hpp"

namespace fraglab::linalg {

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

void Matrix::set_col(std::size_t j, std::span<const double> v) {
    std::copy(v.begin(), v.end(), col(j));
}

Matrix transpose_times(const Matrix& a, const Matrix& b) {
    Matrix out(a.cols(), b.cols());
    for (std::size_t j = 0; j < b.cols(); ++j) {
        for (std::size_t i = 0; i < a.cols(); ++i) {
            out(i, j) = kernels::dot(a.col(i), b.col(j), a.rows());
        }
    }
    return out;
}

Vector transpose_times(const Matrix& a, const Vector& y) {
    Vector out(a.cols());
    for (std::size_t i = 0; i < a.cols(); ++i) {
        out[i] = kernels::dot(a.col(i), y.data(), a.rows());
    }
    return out;
}

Matrix multiply(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows(), b.cols());
    for (std::size_t j = 0; j < b.cols(); ++j) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            kernels::axpy(b(k, j), a.col(k), out.col(j), a.rows());
        }
    }
    return out;
}

Vector multiply(const Matrix& a, const Vector& x) {
    Vector out(a.rows(), 0.0);
    for (std::size_t k = 0; k < a.cols(); ++k) {
        kernels::axpy(x[k], a.col(k), out.data(), a.rows());
    }
    return out;
}

Matrix weighted_cross(const Matrix& a, const Vector& w, const Matrix& b) {
    Matrix out(a.cols(), b.cols());
    for (std::size_t j = 0; j < b.cols(); ++j) {
        for (std::size_t i = 0; i < a.cols(); ++i) {
            out(i, j) = kernels::dot3(w.data(), a.col(i), b.col(j), a.rows());
        }
    }
    return out;
}

Vector weighted_cross(const Matrix& a, const Vector& w, const Vector& y) {
    Vector out(a.cols());
    for (std::size_t i = 0; i < a.cols(); ++i) {
        out[i] = kernels::dot3(w.data(), a.col(i), y.data(), a.rows());
    }
    return out;
}

Matrix add(const Matrix& a, const Matrix& b) {
    Matrix out = a;
    for (std::size_t j = 0; j < a.cols(); ++j) {
        kernels::axpy(1.0, b.col(j), out.col(j), a.rows());
    }
    return out;
}

Matrix subtract(const Matrix& a, const Matrix& b) {
    Matrix out = a;
    for (std::size_t j = 0; j < a.cols(); ++j) {
        kernels::axpy(-1.0, b.col(j), out.col(j), a.rows());
    }
    return out;
}

Matrix scale(Matrix a, double s) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
        kernels::scal(s, a.col(j), a.rows());
    }
    return a;
}

Vector add(const Vector& a, const Vector& b) {
    Vector out = a;
    kernels::axpy(1.0, b.data(), out.data(), a.size());
    return out;
}

Vector subtract(const Vector& a, const Vector& b) {
    Vector out = a;
    kernels::axpy(-1.0, b.data(), out.data(), a.size());
    return out;
}

Vector scale(Vector a, double s) {
    kernels::scal(s, a.data(), a.size());
    return a;
}

double max_abs(const Vector& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    double m = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) {
        for (std::size_t i = 0; i < a.rows(); ++i) {
            m = std::max(m, std::abs(a(i, j) - b(i, j)));
        }
    }
    return m;
}

namespace {

// Lower Cholesky factor; throws on a non-positive pivot. Row-oriented
// classical algorithm; these matrices are tiny.
Matrix cholesky_lower(const Matrix& a) {
    const std::size_t n = a.rows();
    Matrix l(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < j; ++k) s += l(i, k) * l(j, k);
            if (i == j) {
                double d = a(i, i) - s;
                if (!(d > 0.0) || !std::isfinite(d)) {
                    Vector sv = singular_values(a);
                    double cond = sv.back() > 0.0
                                      ? sv.front() / sv.back()
                                      : std::numeric_limits<double>::infinity();
                    throw SingularDesignError("matrix not positive definite", cond);
                }
                l(i, j) = std::sqrt(d);
            } else {
                l(i, j) = (a(i, j) - s) / l(j, j);
            }
        }
    }
    return l;
}

Vector cholesky_solve(const Matrix& l, const Vector& b) {
    const std::size_t n = l.rows();
    Vector y(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * y[k];
        y[i] = s / l(i, i);
    }
    Vector x(n);
    for (std::size_t ii = n; ii-- > 0;) {
        double s = y[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * x[k];
        x[ii] = s / l(ii, ii);
    }
    return x;
}

}  // namespace

Matrix spd_solve(const Matrix& a, const Matrix& b) {
    Matrix l = cholesky_lower(a);
    Matrix out(b.rows(), b.cols());
    for (std::size_t j = 0; j < b.cols(); ++j) {
        Vector rhs(b.col(j), b.col(j) + b.rows());
        Vector x = cholesky_solve(l, rhs);
        out.set_col(j, x);
    }
    return out;
}

Vector spd_solve(const Matrix& a, const Vector& b) {
    return cholesky_solve(cholesky_lower(a), b);
}

Matrix spd_inverse(const Matrix& a) {
    Matrix inv = spd_solve(a, Matrix::identity(a.rows()));
    // Symmetrize to remove factorization skew.
    for (std::size_t j = 0; j < inv.cols(); ++j) {
        for (std::size_t i = 0; i < j; ++i) {
            double v = 0.5 * (inv(i, j) + inv(j, i));
            inv(i, j) = v;
            inv(j, i) = v;
        }
    }
    return inv;
}

Vector singular_values(Matrix a) {
    const std::size_t n = a.cols();
    const std::size_t m = a.rows();
    constexpr int kMaxSweeps = 60;
    constexpr double kTol = 1e-14;

    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double app = kernels::dot(a.col(p), a.col(p), m);
                double aqq = kernels::dot(a.col(q), a.col(q), m);
                double apq = kernels::dot(a.col(p), a.col(q), m);
                if (std::abs(apq) <= kTol * std::sqrt(app * aqq) || apq == 0.0) continue;
                rotated = true;
                double zeta = (aqq - app) / (2.0 * apq);
                double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                           (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                double c = 1.0 / std::sqrt(1.0 + t * t);
                double s = c * t;
                double* cp = a.col(p);
                double* cq = a.col(q);
                for (std::size_t i = 0; i < m; ++i) {
                    double vp = cp[i];
                    double vq = cq[i];
                    cp[i] = c * vp - s * vq;
                    cq[i] = s * vp + c * vq;
                }
            }
        }
        if (!rotated) break;
    }

    Vector sv(n);
    for (std::size_t j = 0; j < n; ++j) {
        sv[j] = std::sqrt(kernels::dot(a.col(j), a.col(j), m));
    }
    std::sort(sv.begin(), sv.end(), std::greater<>());
    return sv;
}

LeastSquares::LeastSquares(const Matrix& x, double rank_tol)
    : rows_(x.rows()), cols_(x.cols()), qr_(x), beta_(x.cols(), 0.0) {
    if (rows_ < cols_) {
        throw ConfigError("least squares needs at least as many rows as parameters");
    }

    for (std::size_t j = 0; j < cols_; ++j) {
        double* cj = qr_.col(j) + j;
        const std::size_t len = rows_ - j;
        double alpha = cj[0];
        double tail_ss = kernels::dot(cj + 1, cj + 1, len - 1);
        if (tail_ss == 0.0) {
            beta_[j] = 0.0;
            continue;
        }
        double mu = std::sqrt(alpha * alpha + tail_ss);
        double v0 = (alpha <= 0.0) ? alpha - mu : -tail_ss / (alpha + mu);
        beta_[j] = 2.0 * v0 * v0 / (tail_ss + v0 * v0);
        kernels::scal(1.0 / v0, cj + 1, len - 1);
        cj[0] = mu;  // new R(j,j); the implicit reflector has v[0] = 1

        for (std::size_t c = j + 1; c < cols_; ++c) {
            double* cc = qr_.col(c) + j;
            double w = beta_[j] * (cc[0] + kernels::dot(cj + 1, cc + 1, len - 1));
            cc[0] -= w;
            kernels::axpy(-w, cj + 1, cc + 1, len - 1);
        }
    }

    Matrix r(cols_, cols_);
    for (std::size_t j = 0; j < cols_; ++j) {
        for (std::size_t i = 0; i <= j; ++i) r(i, j) = qr_(i, j);
    }
    sigma_ = singular_values(r);

    double smax = sigma_.empty() ? 0.0 : sigma_.front();
    double smin = sigma_.empty() ? 0.0 : sigma_.back();
    if (smax == 0.0 || smin < rank_tol * smax) {
        throw SingularDesignError("rank-deficient design", condition_number());
    }
}

double LeastSquares::condition_number() const {
    if (sigma_.empty()) return std::numeric_limits<double>::infinity();
    return sigma_.back() > 0.0 ? sigma_.front() / sigma_.back()
                               : std::numeric_limits<double>::infinity();
}

void LeastSquares::apply_qt(Vector& v) const {
    for (std::size_t j = 0; j < cols_; ++j) {
        if (beta_[j] == 0.0) continue;
        const double* cj = qr_.col(j) + j;
        const std::size_t len = rows_ - j;
        double w = beta_[j] * (v[j] + kernels::dot(cj + 1, v.data() + j + 1, len - 1));
        v[j] -= w;
        kernels::axpy(-w, cj + 1, v.data() + j + 1, len - 1);
    }
}

Vector LeastSquares::solve(const Vector& y) const {
    double rss;
    return solve(y, rss);
}

Vector LeastSquares::solve(const Vector& y, double& rss) const {
    Vector z = y;
    apply_qt(z);
    Vector coef(cols_);
    for (std::size_t ii = cols_; ii-- > 0;) {
        double s = z[ii];
        for (std::size_t k = ii + 1; k < cols_; ++k) s -= qr_(ii, k) * coef[k];
        coef[ii] = s / qr_(ii, ii);
    }
    rss = kernels::dot(z.data() + cols_, z.data() + cols_, rows_ - cols_);
    return coef;
}

double LeastSquares::residual_ss(const Vector& y) const {
    double rss;
    solve(y, rss);
    return rss;
}

Matrix LeastSquares::xtx_inverse() const {
    // R^{-1} by back substitution against identity columns, then R^{-1} R^{-T}.
    const std::size_t p = cols_;
    Matrix rinv(p, p);
    for (std::size_t j = 0; j < p; ++j) {
        for (std::size_t ii = j + 1; ii-- > 0;) {
            double s = (ii == j) ? 1.0 : 0.0;
            for (std::size_t k = ii + 1; k <= j; ++k) s -= qr_(ii, k) * rinv(k, j);
            rinv(ii, j) = s / qr_(ii, ii);
        }
    }
    Matrix out(p, p);
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = i; j < p; ++j) {
            double s = 0.0;
            for (std::size_t k = j; k < p; ++k) s += rinv(i, k) * rinv(j, k);
            out(i, j) = s;
            out(j, i) = s;
        }
    }
    return out;
}

}  // namespace fraglab::linalg
