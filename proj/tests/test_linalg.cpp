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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "fraglab/errors.hpp"
#include "fraglab/linalg.hpp"
#include "support/oracles.hpp"

using namespace fraglab::linalg;

namespace {

Matrix random_design(std::mt19937_64& rng, std::size_t n, std::size_t p) {
    std::uniform_real_distribution<double> dist(-1.0, 3.0);
    Matrix x(n, p);
    for (std::size_t i = 0; i < n; ++i) {
        x(i, 0) = 1.0;
        for (std::size_t j = 1; j < p; ++j) x(i, j) = dist(rng);
    }
    return x;
}

}  // namespace

TEST_CASE("least squares matches the normal-equation oracle") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> noise(0.0, 0.3);
    for (int trial = 0; trial < 20; ++trial) {
        std::size_t n = 40 + static_cast<std::size_t>(trial) * 13;
        std::size_t p = 2 + trial % 4;
        Matrix x = random_design(rng, n, p);
        Vector y(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = 0.7;
            for (std::size_t j = 1; j < p; ++j) y[i] += 0.3 * static_cast<double>(j) * x(i, j);
            y[i] += noise(rng);
        }
        LeastSquares ls(x);
        Vector beta = ls.solve(y);
        Vector ref = oracles::normal_equation_ols(x, y);
        for (std::size_t j = 0; j < p; ++j) {
            CHECK(beta[j] == doctest::Approx(ref[j]).epsilon(1e-9));
        }

        // Residual orthogonality: |X'(y - X beta)| small relative to |X'y|.
        Vector fitted = multiply(x, beta);
        Vector resid = subtract(y, fitted);
        Vector xtr = transpose_times(x, resid);
        double scale = max_abs(transpose_times(x, y)) + 1.0;
        CHECK(max_abs(xtr) < 1e-8 * scale);
    }
}

TEST_CASE("exact linear responses interpolate with zero rss") {
    std::mt19937_64 rng(2);
    Matrix x = random_design(rng, 50, 3);
    Vector c = {1.5, -0.25, 2.0};
    Vector y = multiply(x, c);
    LeastSquares ls(x);
    double rss = 0.0;
    Vector beta = ls.solve(y, rss);
    for (std::size_t j = 0; j < 3; ++j) CHECK(beta[j] == doctest::Approx(c[j]).epsilon(1e-12));
    CHECK(rss == doctest::Approx(0.0).scale(1.0).epsilon(1e-18));
}

TEST_CASE("duplicate columns raise a singular-design error with condition info") {
    Matrix x(10, 3);
    for (std::size_t i = 0; i < 10; ++i) {
        x(i, 0) = 1.0;
        x(i, 1) = static_cast<double>(i);
        x(i, 2) = static_cast<double>(i);  // exact copy
    }
    CHECK_THROWS_AS(LeastSquares{x}, fraglab::SingularDesignError);
    try {
        LeastSquares ls(x);
    } catch (const fraglab::SingularDesignError& e) {
        CHECK(e.condition_number() > 1e10);
    }
}

TEST_CASE("fewer rows than columns is a configuration error") {
    Matrix x(2, 3, 1.0);
    CHECK_THROWS_AS(LeastSquares{x}, fraglab::ConfigError);
}

TEST_CASE("singular values of a known matrix") {
    // diag(3, 1) rotated by 30 degrees keeps singular values {3, 1}.
    double c = std::cos(M_PI / 6.0), s = std::sin(M_PI / 6.0);
    Matrix a(2, 2);
    a(0, 0) = 3.0 * c;
    a(0, 1) = -s;
    a(1, 0) = 3.0 * s;
    a(1, 1) = c;
    Vector sv = singular_values(a);
    CHECK(sv[0] == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(sv[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("xtx_inverse matches the oracle inverse of the gram matrix") {
    std::mt19937_64 rng(3);
    Matrix x = random_design(rng, 120, 4);
    LeastSquares ls(x);
    Matrix mine = ls.xtx_inverse();
    Matrix gram = transpose_times(x, x);
    Matrix ref = oracles::gauss_jordan_inverse(gram);
    CHECK(max_abs_diff(mine, ref) < 1e-10);
}

TEST_CASE("spd inverse and solve") {
    std::mt19937_64 rng(4);
    Matrix x = random_design(rng, 60, 3);
    Matrix a = transpose_times(x, x);

    Matrix inv = spd_inverse(a);
    Matrix prod = multiply(a, inv);
    CHECK(max_abs_diff(prod, Matrix::identity(3)) < 1e-9);

    Vector b = {1.0, -2.0, 0.5};
    Vector sol = spd_solve(a, b);
    Vector back = multiply(a, sol);
    for (std::size_t i = 0; i < 3; ++i) CHECK(back[i] == doctest::Approx(b[i]).epsilon(1e-9));

    Matrix not_pd(2, 2, 0.0);
    not_pd(0, 0) = 1.0;
    not_pd(1, 1) = -1.0;
    CHECK_THROWS_AS(spd_inverse(not_pd), fraglab::SingularDesignError);
}

TEST_CASE("matrix product helpers agree with naive loops") {
    std::mt19937_64 rng(5);
    Matrix a = random_design(rng, 30, 3);
    Matrix b = random_design(rng, 30, 2);
    Vector w(30);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    for (auto& v : w) v = dist(rng);

    Matrix wc = weighted_cross(a, w, b);
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 2; ++j) {
            double s = 0.0;
            for (std::size_t r = 0; r < 30; ++r) s += a(r, i) * w[r] * b(r, j);
            CHECK(wc(i, j) == doctest::Approx(s).epsilon(1e-12));
        }
    }

    Matrix tt = transpose_times(a, b);
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 2; ++j) {
            double s = 0.0;
            for (std::size_t r = 0; r < 30; ++r) s += a(r, i) * b(r, j);
            CHECK(tt(i, j) == doctest::Approx(s).epsilon(1e-12));
        }
    }
}

TEST_CASE("reusing a factorization across responses matches fresh solves") {
    std::mt19937_64 rng(6);
    Matrix x = random_design(rng, 80, 3);
    LeastSquares ls(x);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (int rep = 0; rep < 5; ++rep) {
        Vector y(80);
        for (auto& v : y) v = noise(rng);
        Vector a = ls.solve(y);
        Vector b = oracles::normal_equation_ols(x, y);
        for (std::size_t j = 0; j < 3; ++j) CHECK(a[j] == doctest::Approx(b[j]).epsilon(1e-9));
    }
}
