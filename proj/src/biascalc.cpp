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

#include "fraglab/biascalc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "fraglab/errors.hpp"
#include "fraglab/kernels.hpp"

namespace fraglab::biascalc {

namespace {

void check_lambda_range(const linalg::Vector& lambda) {
    for (double v : lambda) {
        if (!(v >= -1e-12 && v <= 1.0 + 1e-12)) {
            throw ConfigError("lambda diagonal entries must lie in [0,1]");
        }
    }
}

void check_lambda_simplex(const linalg::Matrix& lambda) {
    for (std::size_t i = 0; i < lambda.rows(); ++i) {
        double total = 0.0;
        for (std::size_t j = 0; j < lambda.cols(); ++j) {
            double v = lambda(i, j);
            if (!(v >= -1e-12 && v <= 1.0 + 1e-12)) {
                throw ConfigError("lambda entries must lie in [0,1]");
            }
            total += v;
        }
        if (std::abs(total - 1.0) > 1e-9) {
            throw ConfigError("lambda diagonals must sum to 1 across devices for every user");
        }
    }
}

linalg::Vector column_sums(const linalg::Matrix& m) {
    linalg::Vector s(m.cols());
    for (std::size_t c = 0; c < m.cols(); ++c) s[c] = kernels::sum(m.col(c), m.rows());
    return s;
}

// Full Gram of the common-stacked design [eta X1; ...; eta XJ].
linalg::Matrix common_gram(const std::vector<linalg::Matrix>& xs) {
    const std::size_t k = xs.front().cols();
    const std::size_t n = xs.front().rows();
    linalg::Matrix g(1 + k, 1 + k, 0.0);
    g(0, 0) = static_cast<double>(xs.size() * n);
    for (const auto& xj : xs) {
        linalg::Vector t = column_sums(xj);
        for (std::size_t c = 0; c < k; ++c) {
            g(0, 1 + c) += t[c];
            g(1 + c, 0) += t[c];
        }
        linalg::Matrix xx = linalg::transpose_times(xj, xj);
        for (std::size_t a = 0; a < k; ++a) {
            for (std::size_t b = 0; b < k; ++b) g(1 + a, 1 + b) += xx(a, b);
        }
    }
    return g;
}

// Full Gram of the device-specific stack [eta | X1 0 .. | 0 X2 ..].
linalg::Matrix device_gram(const std::vector<linalg::Matrix>& xs) {
    const std::size_t k = xs.front().cols();
    const std::size_t n = xs.front().rows();
    const std::size_t jd = xs.size();
    linalg::Matrix g(1 + jd * k, 1 + jd * k, 0.0);
    g(0, 0) = static_cast<double>(jd * n);
    for (std::size_t j = 0; j < jd; ++j) {
        linalg::Vector t = column_sums(xs[j]);
        for (std::size_t c = 0; c < k; ++c) {
            g(0, 1 + j * k + c) = t[c];
            g(1 + j * k + c, 0) = t[c];
        }
        linalg::Matrix xx = linalg::transpose_times(xs[j], xs[j]);
        for (std::size_t a = 0; a < k; ++a) {
            for (std::size_t b = 0; b < k; ++b) g(1 + j * k + a, 1 + j * k + b) = xx(a, b);
        }
    }
    return g;
}

// First entry of G^{-1} [0; d]: the intercept component of the bias.
double intercept_component(const linalg::Matrix& gram, const linalg::Vector& slope_delta) {
    linalg::Vector rhs(gram.rows(), 0.0);
    for (std::size_t i = 0; i < slope_delta.size(); ++i) rhs[1 + i] = slope_delta[i];
    return linalg::spd_solve(gram, rhs)[0];
}

linalg::Vector ones_minus(const linalg::Vector& v) {
    linalg::Vector out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = 1.0 - v[i];
    return out;
}

linalg::Matrix center_columns(const linalg::Matrix& x) {
    linalg::Matrix c = x;
    for (std::size_t col = 0; col < x.cols(); ++col) {
        double mean = kernels::sum(x.col(col), x.rows()) / static_cast<double>(x.rows());
        double* p = c.col(col);
        for (std::size_t i = 0; i < x.rows(); ++i) p[i] -= mean;
    }
    return c;
}

}  // namespace

linalg::Matrix vartheta_common(const std::vector<linalg::Matrix>& exposures) {
    const std::size_t k = exposures.front().cols();
    const std::size_t n = exposures.front().rows();
    const double jn = static_cast<double>(exposures.size() * n);

    linalg::Matrix s(k, k, 0.0);
    linalg::Vector t(k, 0.0);
    for (const auto& xj : exposures) {
        linalg::Matrix xx = linalg::transpose_times(xj, xj);
        s = linalg::add(s, xx);
        linalg::Vector tj = column_sums(xj);
        for (std::size_t c = 0; c < k; ++c) t[c] += tj[c];
    }
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = 0; b < k; ++b) s(a, b) -= t[a] * t[b] / jn;
    }
    return linalg::spd_inverse(s);
}

linalg::Matrix vartheta_device_specific(const std::vector<linalg::Matrix>& exposures) {
    const std::size_t k = exposures.front().cols();
    const std::size_t n = exposures.front().rows();
    const std::size_t jd = exposures.size();
    const double jn = static_cast<double>(jd * n);

    std::vector<linalg::Vector> t(jd);
    for (std::size_t j = 0; j < jd; ++j) t[j] = column_sums(exposures[j]);

    linalg::Matrix s(jd * k, jd * k, 0.0);
    for (std::size_t j = 0; j < jd; ++j) {
        linalg::Matrix xx = linalg::transpose_times(exposures[j], exposures[j]);
        for (std::size_t a = 0; a < k; ++a) {
            for (std::size_t b = 0; b < k; ++b) s(j * k + a, j * k + b) = xx(a, b);
        }
    }
    for (std::size_t j1 = 0; j1 < jd; ++j1) {
        for (std::size_t j2 = 0; j2 < jd; ++j2) {
            for (std::size_t a = 0; a < k; ++a) {
                for (std::size_t b = 0; b < k; ++b) {
                    s(j1 * k + a, j2 * k + b) -= t[j1][a] * t[j2][b] / jn;
                }
            }
        }
    }
    return linalg::spd_inverse(s);
}

BiasDecomposition bias_common(const linalg::Matrix& x1, const linalg::Matrix& x2,
                              const linalg::Vector& lambda, double beta0,
                              const linalg::Vector& beta1) {
    const std::size_t n = x1.rows();
    const std::size_t k = x1.cols();
    if (x2.rows() != n || x2.cols() != k) throw ConfigError("bias_common: exposure shape mismatch");
    if (lambda.size() != n) throw ConfigError("bias_common: lambda length mismatch");
    if (beta1.size() != k) throw ConfigError("bias_common: beta1 length mismatch");
    check_lambda_range(lambda);

    linalg::Vector one_minus = ones_minus(lambda);

    // delta3 = (X1 - X2)'(L - I/2) eta b0
    linalg::Vector d3(k, 0.0);
    for (std::size_t c = 0; c < k; ++c) {
        double lam_x1 = kernels::dot(lambda.data(), x1.col(c), n);
        double lam_x2 = kernels::dot(lambda.data(), x2.col(c), n);
        double sum_x1 = kernels::sum(x1.col(c), n);
        double sum_x2 = kernels::sum(x2.col(c), n);
        d3[c] = beta0 * (lam_x1 - lam_x2 - 0.5 * (sum_x1 - sum_x2));
    }

    // delta1 = -[X1'(I-L)X1 + X2'L X2] b1
    linalg::Matrix m1 = linalg::weighted_cross(x1, one_minus, x1);
    linalg::Matrix m2 = linalg::weighted_cross(x2, lambda, x2);
    linalg::Vector d1 = linalg::scale(linalg::multiply(linalg::add(m1, m2), beta1), -1.0);

    // delta2 = [X1'L X2 + X2'(I-L) X1] b1; equals X1'X2 b1 at k = 1
    linalg::Matrix c12 = linalg::add(linalg::weighted_cross(x1, lambda, x2),
                                     linalg::weighted_cross(x2, one_minus, x1));
    linalg::Vector d2 = linalg::multiply(c12, beta1);

    BiasDecomposition out;
    out.form = ModelForm::common_stacked;
    out.vartheta = vartheta_common({x1, x2});
    out.delta1 = d1;
    out.delta2 = d2;
    out.delta3 = d3;
    linalg::Vector total_delta = linalg::add(linalg::add(d1, d2), d3);
    out.total_bias = linalg::multiply(out.vartheta, total_delta);
    out.intercept_bias = intercept_component(common_gram({x1, x2}), total_delta);
    return out;
}

double MomentBundle::nan_marker() { return std::numeric_limits<double>::quiet_NaN(); }

MomentBundle MomentBundle::from_data(const linalg::Matrix& x1, const linalg::Matrix& x2,
                                     const linalg::Vector& lambda) {
    if (x1.cols() != 1 || x2.cols() != 1) {
        throw ConfigError("scalar moment bundle needs k = 1 exposures");
    }
    if (x2.rows() != x1.rows() || lambda.size() != x1.rows()) {
        throw ConfigError("scalar moment bundle: row count mismatch");
    }
    const std::size_t n = x1.rows();
    const double dn = static_cast<double>(n);
    MomentBundle b;
    b.mean_x1 = kernels::sum(x1.col(0), n) / dn;
    b.mean_x2 = kernels::sum(x2.col(0), n) / dn;
    b.mean_x1_sq = kernels::dot(x1.col(0), x1.col(0), n) / dn;
    b.mean_x2_sq = kernels::dot(x2.col(0), x2.col(0), n) / dn;
    b.mean_x1_x2 = kernels::dot(x1.col(0), x2.col(0), n) / dn;
    b.mean_lam_gap = (kernels::dot(lambda.data(), x1.col(0), n) -
                      kernels::dot(lambda.data(), x2.col(0), n)) /
                     dn;
    b.mean_lam_x1_sq = kernels::dot3(lambda.data(), x1.col(0), x1.col(0), n) / dn;
    b.mean_lam_x2_sq = kernels::dot3(lambda.data(), x2.col(0), x2.col(0), n) / dn;
    return b;
}

double bias_common_scalar(const MomentBundle& moments, double lambda, double beta0,
                          double beta1) {
    double wg = std::isnan(moments.mean_lam_gap)
                    ? lambda * (moments.mean_x1 - moments.mean_x2)
                    : moments.mean_lam_gap;
    double wq1 = std::isnan(moments.mean_lam_x1_sq) ? lambda * moments.mean_x1_sq
                                                    : moments.mean_lam_x1_sq;
    double wq2 = std::isnan(moments.mean_lam_x2_sq) ? lambda * moments.mean_x2_sq
                                                    : moments.mean_lam_x2_sq;

    double mean_total = moments.mean_x1 + moments.mean_x2;
    double denom = moments.mean_x1_sq + moments.mean_x2_sq - 0.5 * mean_total * mean_total;
    double scale = std::max(moments.mean_x1_sq + moments.mean_x2_sq, 1.0);
    if (!(denom > 1e-14 * scale)) {
        throw SingularDesignError("no exposure variance in scalar bias denominator",
                                  std::numeric_limits<double>::infinity());
    }

    double numer = (wg - 0.5 * (moments.mean_x1 - moments.mean_x2)) * beta0 +
                   (-(moments.mean_x1_sq - wq1) + moments.mean_x1_x2 - wq2) * beta1;
    return numer / denom;
}

BiasDecomposition bias_device_specific_stacked(const linalg::Matrix& x1,
                                               const linalg::Matrix& x2,
                                               const linalg::Vector& lambda, double beta0,
                                               const linalg::Vector& beta1,
                                               const linalg::Vector& beta2) {
    const std::size_t n = x1.rows();
    const std::size_t k = x1.cols();
    if (x2.rows() != n || x2.cols() != k) {
        throw ConfigError("bias_device_specific_stacked: exposure shape mismatch");
    }
    if (lambda.size() != n || beta1.size() != k || beta2.size() != k) {
        throw ConfigError("bias_device_specific_stacked: dimension mismatch");
    }
    check_lambda_range(lambda);

    linalg::Vector one_minus = ones_minus(lambda);
    linalg::Vector d1(2 * k, 0.0), d2(2 * k, 0.0), d3(2 * k, 0.0);

    // Row block 1: X1'(L - I/2) eta b0 - X1'(I-L)X1 b1 + X1'L X2 b2
    linalg::Vector a1 = linalg::scale(
        linalg::multiply(linalg::weighted_cross(x1, one_minus, x1), beta1), -1.0);
    linalg::Vector c1 = linalg::multiply(linalg::weighted_cross(x1, lambda, x2), beta2);
    for (std::size_t c = 0; c < k; ++c) {
        double lam_x1 = kernels::dot(lambda.data(), x1.col(c), n);
        double sum_x1 = kernels::sum(x1.col(c), n);
        d3[c] = beta0 * (lam_x1 - 0.5 * sum_x1);
        d1[c] = a1[c];
        d2[c] = c1[c];
    }

    // Row block 2: X2'(I/2 - L) eta b0 + X2'(I-L)X1 b1 - X2'L X2 b2
    linalg::Vector a2 = linalg::scale(
        linalg::multiply(linalg::weighted_cross(x2, lambda, x2), beta2), -1.0);
    linalg::Vector c2 = linalg::multiply(linalg::weighted_cross(x2, one_minus, x1), beta1);
    for (std::size_t c = 0; c < k; ++c) {
        double lam_x2 = kernels::dot(lambda.data(), x2.col(c), n);
        double sum_x2 = kernels::sum(x2.col(c), n);
        d3[k + c] = beta0 * (0.5 * sum_x2 - lam_x2);
        d1[k + c] = a2[c];
        d2[k + c] = c2[c];
    }

    BiasDecomposition out;
    out.form = ModelForm::device_specific_stacked;
    out.vartheta = vartheta_device_specific({x1, x2});
    out.delta1 = d1;
    out.delta2 = d2;
    out.delta3 = d3;
    linalg::Vector total_delta = linalg::add(linalg::add(d1, d2), d3);
    out.total_bias = linalg::multiply(out.vartheta, total_delta);
    out.intercept_bias = intercept_component(device_gram({x1, x2}), total_delta);
    return out;
}

SplitBias bias_device_specific_split(const linalg::Matrix& x1, const linalg::Matrix& x2,
                                     const linalg::Vector& lambda, double beta0,
                                     const linalg::Vector& beta1,
                                     const linalg::Vector& beta2) {
    linalg::Matrix lam(x1.rows(), 2);
    for (std::size_t i = 0; i < x1.rows(); ++i) {
        lam(i, 0) = lambda[i];
        lam(i, 1) = 1.0 - lambda[i];
    }
    return bias_device_specific_J_split({x1, x2}, lam, beta0, {beta1, beta2});
}

BiasDecomposition bias_common_J(const std::vector<linalg::Matrix>& exposures,
                                const linalg::Matrix& lambda, double beta0,
                                const linalg::Vector& beta1) {
    const std::size_t jd = exposures.size();
    const std::size_t n = exposures.front().rows();
    const std::size_t k = exposures.front().cols();
    if (lambda.rows() != n || lambda.cols() != jd) {
        throw ConfigError("bias_common_J: lambda must be n x J");
    }
    check_lambda_simplex(lambda);

    linalg::Vector d1(k, 0.0), d2(k, 0.0), d3(k, 0.0);
    const double inv_j = 1.0 / static_cast<double>(jd);

    for (std::size_t j = 0; j < jd; ++j) {
        linalg::Vector lam_j(lambda.col(j), lambda.col(j) + n);

        // delta3 += Xj'(Lj - I/J) eta b0
        for (std::size_t c = 0; c < k; ++c) {
            double lam_x = kernels::dot(lam_j.data(), exposures[j].col(c), n);
            double sum_x = kernels::sum(exposures[j].col(c), n);
            d3[c] += beta0 * (lam_x - inv_j * sum_x);
        }

        // delta1 += Xj'(Lj - I)Xj b1
        linalg::Vector lam_minus_one(n);
        for (std::size_t i = 0; i < n; ++i) lam_minus_one[i] = lam_j[i] - 1.0;
        linalg::Vector a =
            linalg::multiply(linalg::weighted_cross(exposures[j], lam_minus_one, exposures[j]),
                             beta1);
        for (std::size_t c = 0; c < k; ++c) d1[c] += a[c];

        // delta2 += sum_{l != j} Xj'Lj Xl b1
        for (std::size_t l = 0; l < jd; ++l) {
            if (l == j) continue;
            linalg::Vector b = linalg::multiply(
                linalg::weighted_cross(exposures[j], lam_j, exposures[l]), beta1);
            for (std::size_t c = 0; c < k; ++c) d2[c] += b[c];
        }
    }

    BiasDecomposition out;
    out.form = ModelForm::common_stacked;
    out.vartheta = vartheta_common(exposures);
    out.delta1 = d1;
    out.delta2 = d2;
    out.delta3 = d3;
    linalg::Vector total_delta = linalg::add(linalg::add(d1, d2), d3);
    out.total_bias = linalg::multiply(out.vartheta, total_delta);
    out.intercept_bias = intercept_component(common_gram(exposures), total_delta);
    return out;
}

BiasDecomposition bias_device_specific_J_stacked(
    const std::vector<linalg::Matrix>& exposures, const linalg::Matrix& lambda, double beta0,
    const std::vector<linalg::Vector>& betas) {
    const std::size_t jd = exposures.size();
    const std::size_t n = exposures.front().rows();
    const std::size_t k = exposures.front().cols();
    if (lambda.rows() != n || lambda.cols() != jd) {
        throw ConfigError("bias_device_specific_J_stacked: lambda must be n x J");
    }
    if (betas.size() != jd) {
        throw ConfigError("bias_device_specific_J_stacked: expected one beta vector per device");
    }
    check_lambda_simplex(lambda);

    linalg::Vector d1(jd * k, 0.0), d2(jd * k, 0.0), d3(jd * k, 0.0);
    const double inv_j = 1.0 / static_cast<double>(jd);

    for (std::size_t j = 0; j < jd; ++j) {
        linalg::Vector lam_j(lambda.col(j), lambda.col(j) + n);
        linalg::Vector lam_minus_one(n);
        for (std::size_t i = 0; i < n; ++i) lam_minus_one[i] = lam_j[i] - 1.0;

        for (std::size_t c = 0; c < k; ++c) {
            double lam_x = kernels::dot(lam_j.data(), exposures[j].col(c), n);
            double sum_x = kernels::sum(exposures[j].col(c), n);
            d3[j * k + c] = beta0 * (lam_x - inv_j * sum_x);
        }
        linalg::Vector own = linalg::multiply(
            linalg::weighted_cross(exposures[j], lam_minus_one, exposures[j]), betas[j]);
        for (std::size_t c = 0; c < k; ++c) d1[j * k + c] = own[c];

        for (std::size_t l = 0; l < jd; ++l) {
            if (l == j) continue;
            linalg::Vector cross = linalg::multiply(
                linalg::weighted_cross(exposures[j], lam_j, exposures[l]), betas[l]);
            for (std::size_t c = 0; c < k; ++c) d2[j * k + c] += cross[c];
        }
    }

    BiasDecomposition out;
    out.form = ModelForm::device_specific_stacked;
    out.vartheta = vartheta_device_specific(exposures);
    out.delta1 = d1;
    out.delta2 = d2;
    out.delta3 = d3;
    linalg::Vector total_delta = linalg::add(linalg::add(d1, d2), d3);
    out.total_bias = linalg::multiply(out.vartheta, total_delta);
    out.intercept_bias = intercept_component(device_gram(exposures), total_delta);
    return out;
}

SplitBias bias_device_specific_J_split(const std::vector<linalg::Matrix>& exposures,
                                       const linalg::Matrix& lambda, double beta0,
                                       const std::vector<linalg::Vector>& betas) {
    const std::size_t jd = exposures.size();
    const std::size_t n = exposures.front().rows();
    const std::size_t k = exposures.front().cols();
    if (lambda.rows() != n || lambda.cols() != jd) {
        throw ConfigError("bias_device_specific_J_split: lambda must be n x J");
    }
    if (betas.size() != jd) {
        throw ConfigError("bias_device_specific_J_split: expected one beta vector per device");
    }
    check_lambda_simplex(lambda);

    SplitBias out;
    out.bias.resize(jd);
    out.delta1.resize(jd);
    out.delta2.resize(jd);
    out.delta3.resize(jd);

    for (std::size_t j = 0; j < jd; ++j) {
        linalg::Vector lam_j(lambda.col(j), lambda.col(j) + n);
        linalg::Vector lam_minus_one(n);
        for (std::size_t i = 0; i < n; ++i) lam_minus_one[i] = lam_j[i] - 1.0;

        // Intercept partialled out: all products run against centered columns.
        linalg::Matrix centered = center_columns(exposures[j]);
        linalg::Matrix gram = linalg::transpose_times(centered, centered);

        linalg::Vector d3(k, 0.0);
        for (std::size_t c = 0; c < k; ++c) {
            d3[c] = beta0 * kernels::dot(lam_minus_one.data(), centered.col(c), n);
        }
        linalg::Vector d1 = linalg::multiply(
            linalg::weighted_cross(centered, lam_minus_one, exposures[j]), betas[j]);
        linalg::Vector d2(k, 0.0);
        for (std::size_t l = 0; l < jd; ++l) {
            if (l == j) continue;
            linalg::Vector cross = linalg::multiply(
                linalg::weighted_cross(centered, lam_j, exposures[l]), betas[l]);
            for (std::size_t c = 0; c < k; ++c) d2[c] += cross[c];
        }

        linalg::Vector total_delta = linalg::add(linalg::add(d1, d2), d3);
        try {
            out.bias[j] = linalg::spd_solve(gram, total_delta);
        } catch (const SingularDesignError&) {
            throw SingularDesignError(
                "device " + std::to_string(j + 1) + " has no exposure variation",
                std::numeric_limits<double>::infinity());
        }
        out.delta1[j] = std::move(d1);
        out.delta2[j] = std::move(d2);
        out.delta3[j] = std::move(d3);
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {

struct MomentTable {
    // [device][covariate]
    std::vector<std::vector<double>> mean;
    std::vector<std::vector<double>> second;
};

MomentTable exposure_moments(const std::vector<linalg::Matrix>& xs) {
    MomentTable t;
    const std::size_t n = xs.front().rows();
    const double dn = static_cast<double>(n);
    for (const auto& xj : xs) {
        std::vector<double> m(xj.cols()), q(xj.cols());
        for (std::size_t c = 0; c < xj.cols(); ++c) {
            m[c] = kernels::sum(xj.col(c), n) / dn;
            q[c] = kernels::dot(xj.col(c), xj.col(c), n) / dn;
        }
        t.mean.push_back(std::move(m));
        t.second.push_back(std::move(q));
    }
    return t;
}

double correlation(const double* a, const double* b, std::size_t n) {
    const double dn = static_cast<double>(n);
    double ma = kernels::sum(a, n) / dn;
    double mb = kernels::sum(b, n) / dn;
    double saa = kernels::dot(a, a, n) / dn - ma * ma;
    double sbb = kernels::dot(b, b, n) / dn - mb * mb;
    double sab = kernels::dot(a, b, n) / dn - ma * mb;
    if (!(saa > 0.0) || !(sbb > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    return sab / std::sqrt(saa * sbb);
}

// Max |t| from regressing each target column on [eta, all exposure columns].
double max_dependence_t(const std::vector<linalg::Matrix>& xs, const linalg::Matrix& targets) {
    const std::size_t n = xs.front().rows();
    const std::size_t k = xs.front().cols();
    const std::size_t jd = xs.size();
    const std::size_t p = 1 + jd * k;
    if (n <= p) return 0.0;

    linalg::Matrix design(n, p, 0.0);
    for (std::size_t i = 0; i < n; ++i) design(i, 0) = 1.0;
    for (std::size_t j = 0; j < jd; ++j) {
        for (std::size_t c = 0; c < k; ++c) {
            design.set_col(1 + j * k + c, xs[j].col_span(c));
        }
    }

    linalg::LeastSquares ls(design);
    linalg::Matrix xtx_inv = ls.xtx_inverse();
    double max_t = 0.0;
    for (std::size_t col = 0; col < targets.cols(); ++col) {
        linalg::Vector y(targets.col(col), targets.col(col) + n);
        double rss = 0.0;
        linalg::Vector coef = ls.solve(y, rss);
        double sigma2 = rss / static_cast<double>(n - p);
        if (sigma2 < 1e-30) continue;  // constant target: no dependence
        for (std::size_t s = 1; s < p; ++s) {
            double se = std::sqrt(sigma2 * xtx_inv(s, s));
            if (se > 0.0) max_t = std::max(max_t, std::abs(coef[s]) / se);
        }
    }
    return max_t;
}

STCReport stc_from_parts(const std::vector<linalg::Matrix>& xs, double lambda_t,
                         const std::string& lambda_method, const StcThresholds& thresholds) {
    const std::size_t jd = xs.size();
    const std::size_t k = xs.front().cols();
    MomentTable moments = exposure_moments(xs);

    STCReport rep;
    rep.thresholds = thresholds;
    rep.lambda_method = lambda_method;

    for (std::size_t c = 0; c < k; ++c) {
        double mean_scale = 0.0, second_scale = 0.0;
        for (std::size_t j = 0; j < jd; ++j) {
            mean_scale = std::max(mean_scale, std::abs(moments.mean[j][c]));
            second_scale = std::max(second_scale, std::abs(moments.second[j][c]));
        }
        mean_scale = std::max(mean_scale, 1e-12);
        second_scale = std::max(second_scale, 1e-12);
        for (std::size_t j1 = 0; j1 < jd; ++j1) {
            for (std::size_t j2 = j1 + 1; j2 < jd; ++j2) {
                rep.mean_gap = std::max(
                    rep.mean_gap,
                    std::abs(moments.mean[j1][c] - moments.mean[j2][c]) / mean_scale);
                rep.second_moment_gap = std::max(
                    rep.second_moment_gap,
                    std::abs(moments.second[j1][c] - moments.second[j2][c]) / second_scale);
            }
        }
    }

    const std::size_t n = xs.front().rows();
    for (std::size_t j1 = 0; j1 < jd; ++j1) {
        for (std::size_t j2 = j1 + 1; j2 < jd; ++j2) {
            for (std::size_t a = 0; a < k; ++a) {
                for (std::size_t b = 0; b < k; ++b) {
                    double r = correlation(xs[j1].col(a), xs[j2].col(b), n);
                    if (!std::isnan(r)) rep.cross_corr = std::max(rep.cross_corr, std::abs(r));
                }
            }
        }
    }

    rep.lambda_exposure_dependence = lambda_t;
    rep.mean_ok = rep.mean_gap < thresholds.rel_gap;
    rep.second_moment_ok = rep.second_moment_gap < thresholds.rel_gap;
    rep.independence_ok = rep.cross_corr < thresholds.max_abs_corr;
    rep.lambda_ok = rep.lambda_exposure_dependence < thresholds.max_t;
    return rep;
}

}  // namespace

STCReport check_stc(const datagen::Population& pop, const StcThresholds& thresholds) {
    if (pop.lambda.rows() != pop.n_users()) {
        throw ConfigError("check_stc: population carries no preference probabilities");
    }
    double t = max_dependence_t(pop.exposures, pop.lambda);
    return stc_from_parts(pop.exposures, t, "stored-preference-regression", thresholds);
}

STCReport check_stc(const fragmentation::FragmentedDataset& f, const StcThresholds& thresholds) {
    if (!f.has_oracle()) {
        throw ConfigError("check_stc on fragments needs the oracle user linkage");
    }
    // Rebuild the per-user layout.
    std::map<std::int64_t, std::size_t> user_slot;
    for (auto uid : f.oracle_user) user_slot.emplace(uid, user_slot.size());
    const std::size_t n = user_slot.size();
    const std::size_t jd = f.n_devices;
    const std::size_t k = f.n_covariates;

    std::vector<linalg::Matrix> xs(jd, linalg::Matrix(n, k));
    linalg::Matrix one_hot(n, jd, 0.0);
    for (std::size_t r = 0; r < f.n_fragments(); ++r) {
        std::size_t slot = user_slot[f.oracle_user[r]];
        std::size_t j = static_cast<std::size_t>(f.device[r]);
        for (std::size_t c = 0; c < k; ++c) xs[j](slot, c) = f.x(r, c);
        if (f.y[r] != 0.0) one_hot(slot, j) = 1.0;
    }
    double t = max_dependence_t(xs, one_hot);
    return stc_from_parts(xs, t, "one-hot-regression", thresholds);
}

MatrixAnalysis analyze_correlation_matrix(const linalg::Matrix& corr) {
    const std::size_t jd = corr.rows();
    MatrixAnalysis out;
    out.diagonal_dominant.assign(jd, false);

    // Rows finite in every column participate in the direction comparison.
    std::vector<bool> usable_row(jd, true);
    for (std::size_t i = 0; i < jd; ++i) {
        for (std::size_t j = 0; j < jd; ++j) {
            if (std::isnan(corr(i, j))) usable_row[i] = false;
        }
    }

    std::vector<linalg::Vector> directions;
    for (std::size_t col = 0; col < jd; ++col) {
        linalg::Vector u;
        double norm_sq = 0.0;
        for (std::size_t i = 0; i < jd; ++i) {
            if (!usable_row[i]) continue;
            u.push_back(corr(i, col));
            norm_sq += corr(i, col) * corr(i, col);
        }
        if (u.size() < 2 || norm_sq <= 0.0) continue;
        double inv = 1.0 / std::sqrt(norm_sq);
        for (double& v : u) v *= inv;
        // Sign convention: largest-magnitude component positive.
        std::size_t arg = 0;
        for (std::size_t i = 1; i < u.size(); ++i) {
            if (std::abs(u[i]) > std::abs(u[arg])) arg = i;
        }
        if (u[arg] < 0.0) {
            for (double& v : u) v = -v;
        }
        directions.push_back(std::move(u));
    }

    if (directions.size() >= 2) {
        linalg::Vector mean(directions.front().size(), 0.0);
        for (const auto& u : directions) {
            for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += u[i];
        }
        double norm_sq = 0.0;
        for (double v : mean) norm_sq += v * v;
        if (norm_sq > 0.0) {
            double inv = 1.0 / std::sqrt(norm_sq);
            for (double& v : mean) v *= inv;
            for (const auto& u : directions) {
                for (std::size_t i = 0; i < mean.size(); ++i) {
                    out.proportionality_stat =
                        std::max(out.proportionality_stat, std::abs(u[i] - mean[i]));
                }
            }
        }
    }

    for (std::size_t col = 0; col < jd; ++col) {
        if (std::isnan(corr(col, col))) continue;
        double col_sum = 0.0;
        for (std::size_t i = 0; i < jd; ++i) {
            if (!std::isnan(corr(i, col))) col_sum += corr(i, col);
        }
        out.diagonal_dominant[col] = corr(col, col) > col_sum;
    }
    return out;
}

CorrelationDiagnostic correlation_diagnostic(const fragmentation::FragmentedDataset& f) {
    if (!f.has_oracle()) {
        throw ConfigError("correlation_diagnostic needs the oracle user linkage");
    }
    std::map<std::int64_t, std::size_t> user_slot;
    for (auto uid : f.oracle_user) user_slot.emplace(uid, user_slot.size());
    const std::size_t n = user_slot.size();
    const std::size_t jd = f.n_devices;
    const std::size_t k = f.n_covariates;

    linalg::Matrix y_by_device(n, jd, 0.0);
    std::vector<linalg::Matrix> x_by_device(jd, linalg::Matrix(n, k, 0.0));
    for (std::size_t r = 0; r < f.n_fragments(); ++r) {
        std::size_t slot = user_slot[f.oracle_user[r]];
        std::size_t j = static_cast<std::size_t>(f.device[r]);
        y_by_device(slot, j) = f.y[r];
        for (std::size_t c = 0; c < k; ++c) x_by_device[j](slot, c) = f.x(r, c);
    }

    CorrelationDiagnostic out;
    out.n_users = n;
    for (std::size_t c = 0; c < k; ++c) {
        linalg::Matrix m(jd, jd);
        for (std::size_t jy = 0; jy < jd; ++jy) {
            for (std::size_t jx = 0; jx < jd; ++jx) {
                m(jy, jx) = correlation(y_by_device.col(jy), x_by_device[jx].col(c), n);
            }
        }
        MatrixAnalysis analysis = analyze_correlation_matrix(m);
        out.proportionality_stat =
            std::max(out.proportionality_stat, analysis.proportionality_stat);
        out.diagonal_dominant.push_back(std::move(analysis.diagonal_dominant));
        out.corr.push_back(std::move(m));
    }
    return out;
}

linalg::Vector estimate_lambda_purchase_share(const fragmentation::FragmentedDataset& f) {
    linalg::Vector counts(f.n_devices, 0.0);
    double total = 0.0;
    for (std::size_t r = 0; r < f.n_fragments(); ++r) {
        if (f.y[r] != 0.0) {
            counts[static_cast<std::size_t>(f.device[r])] += 1.0;
            total += 1.0;
        }
    }
    if (total == 0.0) {
        return linalg::Vector(f.n_devices, 1.0 / static_cast<double>(f.n_devices));
    }
    for (double& c : counts) c /= total;
    return counts;
}

}  // namespace fraglab::biascalc
