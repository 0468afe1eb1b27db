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

#include <algorithm>
#include <cmath>
#include <random>

#include "fraglab/datagen.hpp"
#include "fraglab/errors.hpp"
#include "fraglab/estimators.hpp"
#include "fraglab/rng.hpp"
#include "support/oracles.hpp"

using namespace fraglab;
using namespace fraglab::datagen;
using namespace fraglab::fragmentation;
using namespace fraglab::estimators;

namespace {

DGPConfig table1_config(bool same_device_ads) {
    DGPConfig cfg;
    cfg.n_users = 2;
    cfg.n_devices = 2;
    cfg.n_covariates = 1;
    cfg.beta0 = 1.0;
    cfg.beta1 = {0.0};
    cfg.noise_sigma = 0.0;
    cfg.seed = 1;
    cfg.exposure.family = ExposureFamily::fixed_matrix;
    linalg::Matrix x1(2, 1), x2(2, 1);
    if (same_device_ads) {
        x1(0, 0) = 2; x1(1, 0) = 3;
        x2(0, 0) = 0; x2(1, 0) = 1;
    } else {
        x1(0, 0) = 0; x1(1, 0) = 1;
        x2(0, 0) = 2; x2(1, 0) = 3;
    }
    cfg.exposure.fixed = {x1, x2};
    cfg.preference.kind = PreferenceKind::constant;
    cfg.preference.lambda = {1.0, 0.0};
    return cfg;
}

DGPConfig plain_config(std::uint64_t seed, double sigma = 0.0, std::size_t n = 2000) {
    DGPConfig cfg;
    cfg.n_users = n;
    cfg.n_devices = 2;
    cfg.n_covariates = 1;
    cfg.beta0 = 1.0;
    cfg.beta1 = {0.5};
    cfg.noise_sigma = sigma;
    cfg.seed = seed;
    cfg.exposure.family = ExposureFamily::poisson;
    cfg.exposure.mean = {{3.0}, {2.0}};
    cfg.preference.kind = PreferenceKind::constant;
    cfg.preference.lambda = {0.5, 0.5};
    return cfg;
}

}  // namespace

TEST_CASE("worked example slopes: 0.4 on panel (b), -0.4 on panel (c), 0 on truth") {
    Population pop_b = generate_population(table1_config(true));
    FragmentedDataset fb = fragment(pop_b, draw_assignment(pop_b));
    EstimateReport rb = estimate_fragmented(fb.view(), ModelForm::common_stacked);
    CHECK(std::abs(rb.coefficients[1] - 0.4) < 1e-12);
    CHECK(std::abs(rb.coefficients[0] + 0.1) < 1e-12);

    Population pop_c = generate_population(table1_config(false));
    FragmentedDataset fc = fragment(pop_c, draw_assignment(pop_c));
    EstimateReport rc = estimate_fragmented(fc.view(), ModelForm::common_stacked);
    CHECK(std::abs(rc.coefficients[1] + 0.4) < 1e-12);

    EstimateReport rt = estimate_true(pop_b, ModelForm::true_common);
    CHECK(std::abs(rt.coefficients[1]) < 1e-12);
    CHECK(std::abs(rt.coefficients[0] - 1.0) < 1e-12);
}

TEST_CASE("exact linear response interpolates") {
    DesignMatrices d;
    d.form = ModelForm::true_common;
    d.terms = {"intercept", "x1"};
    d.x = linalg::Matrix(6, 2);
    d.y.resize(6);
    for (std::size_t i = 0; i < 6; ++i) {
        d.x(i, 0) = 1.0;
        d.x(i, 1) = static_cast<double>(i * i);
        d.y[i] = 2.0 - 3.0 * d.x(i, 1);
    }
    EstimateReport rep = ols(d);
    CHECK(rep.coefficients[0] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(rep.coefficients[1] == doctest::Approx(-3.0).epsilon(1e-12));
    CHECK(rep.rss == doctest::Approx(0.0).scale(1.0).epsilon(1e-16));
    CHECK(rep.condition_number >= 1.0);
}

TEST_CASE("noiseless generation recovers the truth") {
    Population pop = generate_population(plain_config(31));
    EstimateReport rep = estimate_true(pop, ModelForm::true_common);
    CHECK(rep.coefficients[0] == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(rep.coefficients[1] == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("noisy generation recovers the truth within 4 standard errors") {
    for (std::uint64_t rep_seed = 0; rep_seed < 200; ++rep_seed) {
        DGPConfig cfg = plain_config(1000 + rep_seed, 0.8, 300);
        Population pop = generate_population(cfg);
        EstimateReport rep = estimate_true(pop, ModelForm::true_common);
        CHECK(std::abs(rep.coefficients[1] - 0.5) < 4.0 * rep.standard_errors[1]);
    }
}

TEST_CASE("device-specific truth is recovered by the device-specific fit") {
    DGPConfig cfg = plain_config(32);
    cfg.beta1.clear();
    cfg.beta_by_device = {{0.5}, {-0.3}};
    Population pop = generate_population(cfg);
    EstimateReport rep = estimate_true(pop, ModelForm::true_device_specific);
    CHECK(rep.coefficients[1] == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(rep.coefficients[2] == doctest::Approx(-0.3).epsilon(1e-10));
}

TEST_CASE("normal-equation residual orthogonality holds on fragmented fits") {
    Population pop = generate_population(plain_config(33, 0.6));
    FragmentedDataset f = fragment(pop, draw_assignment(pop));
    DesignMatrices d = stack_common(f);
    EstimateReport rep = ols(d);
    linalg::Vector fitted = linalg::multiply(d.x, rep.coefficients);
    linalg::Vector resid = linalg::subtract(d.y, fitted);
    linalg::Vector xtr = linalg::transpose_times(d.x, resid);
    double scale = linalg::max_abs(linalg::transpose_times(d.x, d.y)) + 1.0;
    CHECK(linalg::max_abs(xtr) < 1e-8 * scale);
}

TEST_CASE("permuting fragment rows leaves the estimate unchanged") {
    Population pop = generate_population(plain_config(34, 0.5, 500));
    FragmentedDataset f = fragment(pop, draw_assignment(pop));
    DesignMatrices d = stack_common(f);
    EstimateReport before = ols(d);

    std::mt19937_64 rng(99);
    std::vector<std::size_t> perm(d.x.rows());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    DesignMatrices shuffled = d;
    for (std::size_t r = 0; r < perm.size(); ++r) {
        shuffled.y[r] = d.y[perm[r]];
        for (std::size_t c = 0; c < d.x.cols(); ++c) shuffled.x(r, c) = d.x(perm[r], c);
    }
    EstimateReport after = ols(shuffled);
    for (std::size_t t = 0; t < before.coefficients.size(); ++t) {
        CHECK(after.coefficients[t] ==
              doctest::Approx(before.coefficients[t]).epsilon(1e-12));
    }
}

TEST_CASE("empty exposure on a device makes its split fit singular") {
    DGPConfig cfg = plain_config(35);
    cfg.n_users = 50;
    cfg.exposure.family = ExposureFamily::fixed_matrix;
    linalg::Matrix x1(50, 1), x2(50, 1, 0.0);  // device 2 never sees ads
    for (std::size_t i = 0; i < 50; ++i) x1(i, 0) = static_cast<double>(1 + i % 5);
    cfg.exposure.fixed = {x1, x2};
    cfg.preference.lambda = {1.0, 0.0};
    Population pop = generate_population(cfg);
    FragmentedDataset f = fragment(pop, draw_assignment(pop));
    CHECK_THROWS_AS(estimate_fragmented_split(f.view()), SingularDesignError);
}

TEST_CASE("fragmented standard errors shrink against matched data") {
    // Fragmentation triples the row count; in the noise-dominated regime the
    // reported uncertainty shrinks even as the point estimate moves (the
    // narrower-CI phenomenon on engagement-like data).
    DGPConfig cfg = plain_config(36, 4.0, 4000);
    cfg.n_devices = 3;
    cfg.beta0 = 1.0;
    cfg.exposure.mean = {{3.0}, {2.0}, {1.0}};
    cfg.preference.lambda = {0.4, 0.4, 0.2};
    Population pop = generate_population(cfg);
    FragmentedDataset f = fragment(pop, draw_assignment(pop));
    EstimateReport frag = estimate_fragmented(f.view(), ModelForm::common_stacked);
    EstimateReport truth = estimate_true(pop, ModelForm::true_common);
    CHECK(frag.standard_errors[1] < truth.standard_errors[1]);
}

TEST_CASE("symmetric fragmentation attenuates the slope by half") {
    DGPConfig cfg = plain_config(37, 0.0, 20000);
    cfg.exposure.mean = {{3.0}, {3.0}};
    Population pop = generate_population(cfg);
    FragmentedDataset f = fragment(pop, draw_assignment(pop));
    EstimateReport rep = estimate_fragmented(f.view(), ModelForm::common_stacked);
    CHECK(rep.coefficients[1] == doctest::Approx(0.25).epsilon(0.06));  // beta1/2
}

TEST_CASE("mixed estimator endpoints collapse to the pure fits") {
    Population pop = generate_population(plain_config(38, 0.4, 600));
    AssignmentMatrix a = draw_assignment(pop);

    MixedEstimateReport none = estimate_mixed(pop, a, 0.0);
    EstimateReport truth = estimate_true(pop, ModelForm::true_common);
    for (std::size_t t = 0; t < 2; ++t) {
        CHECK(none.beta_mixed[t] == doctest::Approx(truth.coefficients[t]).epsilon(1e-12));
    }
    CHECK(none.n_fragmented_users == 0);

    MixedEstimateReport all = estimate_mixed(pop, a, 1.0);
    FragmentedDataset f = fragment(pop, a);
    EstimateReport frag = estimate_fragmented(f.view(), ModelForm::common_stacked);
    for (std::size_t t = 0; t < 2; ++t) {
        CHECK(all.beta_mixed[t] == doctest::Approx(frag.coefficients[t]).epsilon(1e-12));
    }
}

TEST_CASE("durbin-theil identity holds at interior mixing fractions") {
    Population pop = generate_population(plain_config(39, 0.4, 800));
    AssignmentMatrix a = draw_assignment(pop);
    for (double r : {0.25, 0.5, 0.75}) {
        MixedEstimateReport rep = estimate_mixed(pop, a, r);
        CHECK(rep.identity_gap < 1e-10);
        CHECK(rep.n_fragmented_users ==
              static_cast<std::size_t>(std::llround(r * 800)));
        // omega row sums stay inside [0, 1] in the scalar-covariate case.
        CHECK(rep.pooled.n_rows == rep.n_fragmented_users * 2 + (800 - rep.n_fragmented_users));
    }
}

TEST_CASE("mixed selection is deterministic in the seed") {
    Population pop = generate_population(plain_config(40, 0.4, 500));
    AssignmentMatrix a = draw_assignment(pop);
    MixedEstimateReport r1 = estimate_mixed(pop, a, 0.5);
    MixedEstimateReport r2 = estimate_mixed(pop, a, 0.5);
    for (std::size_t t = 0; t < 2; ++t) CHECK(r1.beta_mixed[t] == r2.beta_mixed[t]);
    MixedEstimateReport r3 = estimate_mixed(pop, a, 0.5, 777);
    bool same = true;
    for (std::size_t t = 0; t < 2; ++t) same = same && (r1.beta_mixed[t] == r3.beta_mixed[t]);
    CHECK(!same);
}

TEST_CASE("estimate_mixed validates the mixing fraction") {
    Population pop = generate_population(plain_config(41, 0.0, 50));
    AssignmentMatrix a = draw_assignment(pop);
    CHECK_THROWS_AS(estimate_mixed(pop, a, -0.1), ConfigError);
    CHECK_THROWS_AS(estimate_mixed(pop, a, 1.1), ConfigError);
}

TEST_CASE("ols agrees with the normal-equation oracle on fragmented data") {
    Population pop = generate_population(plain_config(42, 0.9, 300));
    FragmentedDataset f = fragment(pop, draw_assignment(pop));
    DesignMatrices d = stack_device_specific(f);
    EstimateReport rep = ols(d);
    linalg::Vector ref = oracles::normal_equation_ols(d.x, d.y);
    for (std::size_t t = 0; t < ref.size(); ++t) {
        CHECK(rep.coefficients[t] == doctest::Approx(ref[t]).epsilon(1e-9));
    }
}
