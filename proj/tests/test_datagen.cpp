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

#include "fraglab/datagen.hpp"
#include "fraglab/errors.hpp"

using namespace fraglab;
using namespace fraglab::datagen;

namespace {

DGPConfig base_config() {
    DGPConfig cfg;
    cfg.n_users = 500;
    cfg.n_devices = 2;
    cfg.n_covariates = 1;
    cfg.beta0 = 1.0;
    cfg.beta1 = {0.5};
    cfg.noise_sigma = 0.0;
    cfg.seed = 7;
    cfg.exposure.family = ExposureFamily::poisson;
    cfg.exposure.mean = {{3.0}, {1.0}};
    cfg.preference.kind = PreferenceKind::constant;
    cfg.preference.lambda = {0.5, 0.5};
    return cfg;
}

// The worked two-user example: totals of 2 and 4 ads, null effect, unit
// intercept, so both users purchase exactly 1.
DGPConfig table1_config() {
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
    x1(0, 0) = 2.0; x1(1, 0) = 3.0;
    x2(0, 0) = 0.0; x2(1, 0) = 1.0;
    cfg.exposure.fixed = {x1, x2};
    cfg.preference.kind = PreferenceKind::constant;
    cfg.preference.lambda = {1.0, 0.0};
    return cfg;
}

}  // namespace

TEST_CASE("fixed-matrix worked example: both outcomes equal one") {
    Population pop = generate_population(table1_config());
    REQUIRE(pop.n_users() == 2);
    CHECK(pop.outcomes[0] == 1.0);
    CHECK(pop.outcomes[1] == 1.0);
    CHECK(pop.exposures[0](0, 0) + pop.exposures[1](0, 0) == 2.0);
    CHECK(pop.exposures[0](1, 0) + pop.exposures[1](1, 0) == 4.0);
}

TEST_CASE("null model produces the zero outcome vector") {
    DGPConfig cfg = base_config();
    cfg.beta0 = 0.0;
    cfg.beta1 = {0.0};
    Population pop = generate_population(cfg);
    for (double y : pop.outcomes) CHECK(y == 0.0);
}

TEST_CASE("outcomes recompute row-exactly from emitted exposures") {
    // Common effect, sigma = 0: y_i = 1 + 0.5 (x_i1 + x_i2), bitwise.
    Population pop = generate_population(base_config());
    for (std::size_t i = 0; i < pop.n_users(); ++i) {
        double expected = 1.0;
        for (std::size_t j = 0; j < 2; ++j) expected += pop.exposures[j](i, 0) * 0.5;
        CHECK(pop.outcomes[i] == expected);
    }
}

TEST_CASE("dgp identity holds exactly with noise folded into eps") {
    DGPConfig cfg = base_config();
    cfg.noise_sigma = 1.5;
    cfg.n_covariates = 2;
    cfg.beta1 = {0.5, -0.25};
    cfg.exposure.mean = {{3.0, 2.0}, {1.0, 4.0}};
    Population pop = generate_population(cfg);
    for (std::size_t i = 0; i < pop.n_users(); ++i) {
        double expected = cfg.beta0;
        for (std::size_t j = 0; j < 2; ++j) {
            for (std::size_t c = 0; c < 2; ++c) {
                expected += pop.exposures[j](i, c) * cfg.beta1[c];
            }
        }
        expected += pop.noise[i];
        CHECK(pop.outcomes[i] == expected);
    }
}

TEST_CASE("device-specific truth uses per-device coefficients") {
    DGPConfig cfg = base_config();
    cfg.beta1.clear();
    cfg.beta_by_device = {{0.5}, {-0.2}};
    Population pop = generate_population(cfg);
    for (std::size_t i = 0; i < pop.n_users(); ++i) {
        double expected = 1.0 + 0.5 * pop.exposures[0](i, 0) - 0.2 * pop.exposures[1](i, 0);
        CHECK(pop.outcomes[i] == expected);
    }
}

TEST_CASE("same seed regenerates an identical population") {
    Population a = generate_population(base_config());
    Population b = generate_population(base_config());
    REQUIRE(a.n_users() == b.n_users());
    for (std::size_t i = 0; i < a.n_users(); ++i) {
        CHECK(a.outcomes[i] == b.outcomes[i]);
        CHECK(a.noise[i] == b.noise[i]);
        for (std::size_t j = 0; j < 2; ++j) CHECK(a.exposures[j](i, 0) == b.exposures[j](i, 0));
        for (std::size_t j = 0; j < 2; ++j) CHECK(a.lambda(i, j) == b.lambda(i, j));
    }

    DGPConfig other = base_config();
    other.seed = 8;
    Population c = generate_population(other);
    int diffs = 0;
    for (std::size_t i = 0; i < a.n_users(); ++i) {
        diffs += (a.exposures[0](i, 0) != c.exposures[0](i, 0));
    }
    CHECK(diffs > 0);
}

TEST_CASE("poisson exposure means converge to the configured target") {
    DGPConfig cfg = base_config();
    cfg.n_users = 20000;
    cfg.exposure.mean = {{3.0}, {1.5}};
    Population pop = generate_population(cfg);
    for (std::size_t j = 0; j < 2; ++j) {
        double mu = cfg.exposure.mean[j][0];
        double total = 0.0;
        for (std::size_t i = 0; i < pop.n_users(); ++i) total += pop.exposures[j](i, 0);
        double mean = total / static_cast<double>(pop.n_users());
        CHECK(std::abs(mean - mu) < 4.0 * std::sqrt(mu / static_cast<double>(pop.n_users())));
    }
}

TEST_CASE("gaussian copula induces cross-device exposure correlation") {
    auto empirical_corr = [](const Population& pop) {
        const std::size_t n = pop.n_users();
        double m1 = 0, m2 = 0, q1 = 0, q2 = 0, c12 = 0;
        for (std::size_t i = 0; i < n; ++i) {
            double a = pop.exposures[0](i, 0), b = pop.exposures[1](i, 0);
            m1 += a; m2 += b; q1 += a * a; q2 += b * b; c12 += a * b;
        }
        m1 /= n; m2 /= n; q1 /= n; q2 /= n; c12 /= n;
        return (c12 - m1 * m2) / std::sqrt((q1 - m1 * m1) * (q2 - m2 * m2));
    };

    DGPConfig cfg = base_config();
    cfg.n_users = 20000;
    cfg.exposure.mean = {{4.0}, {4.0}};

    cfg.exposure.rho = 0.0;
    CHECK(std::abs(empirical_corr(generate_population(cfg))) < 4.0 / std::sqrt(20000.0));

    cfg.exposure.rho = 0.6;
    // The marginal transform attenuates the Gaussian correlation somewhat.
    CHECK(empirical_corr(generate_population(cfg)) > 0.45);

    cfg.exposure.rho = -0.6;
    CHECK(empirical_corr(generate_population(cfg)) < -0.45);
}

TEST_CASE("negative equicorrelation bound scales with the device count") {
    DGPConfig cfg = base_config();
    cfg.n_devices = 3;
    cfg.exposure.mean = {{3.0}, {3.0}, {3.0}};
    cfg.preference.lambda = {0.4, 0.3, 0.3};
    cfg.exposure.rho = -0.6;  // below -1/(J-1) = -0.5
    CHECK_THROWS_AS(generate_population(cfg), ConfigError);
    cfg.exposure.rho = -0.3;
    CHECK_NOTHROW(generate_population(cfg));
}

TEST_CASE("lognormal-rounded family hits the requested scale") {
    DGPConfig cfg = base_config();
    cfg.n_users = 20000;
    cfg.exposure.family = ExposureFamily::lognormal_rounded;
    cfg.exposure.mean = {{6.0}, {6.0}};
    cfg.exposure.variance = {{4.0}, {4.0}};
    Population pop = generate_population(cfg);
    double total = 0.0;
    for (std::size_t i = 0; i < pop.n_users(); ++i) total += pop.exposures[0](i, 0);
    double mean = total / static_cast<double>(pop.n_users());
    CHECK(mean == doctest::Approx(6.0).epsilon(0.05));  // rounding shifts it slightly
}

TEST_CASE("logistic preference matches the sigmoid recomputation") {
    DGPConfig cfg = base_config();
    cfg.preference.kind = PreferenceKind::logistic_gap;
    cfg.preference.gamma0 = 0.25;
    cfg.preference.gamma1 = {0.8};
    Population pop = generate_population(cfg);
    for (std::size_t i = 0; i < pop.n_users(); ++i) {
        double gap = pop.exposures[0](i, 0) - pop.exposures[1](i, 0);
        double expected = 1.0 / (1.0 + std::exp(-(0.25 + 0.8 * gap)));
        CHECK(std::abs(pop.lambda(i, 0) - expected) < 1e-12);
        CHECK(std::abs(pop.lambda(i, 0) + pop.lambda(i, 1) - 1.0) < 1e-12);
    }
}

TEST_CASE("dirichlet and softmax preferences stay on the simplex") {
    DGPConfig cfg = base_config();
    cfg.n_devices = 3;
    cfg.exposure.mean = {{3.0}, {2.0}, {1.0}};

    cfg.preference.kind = PreferenceKind::dirichlet;
    cfg.preference.dirichlet_alpha = {2.0, 1.0, 0.5};
    Population pop = generate_population(cfg);
    for (std::size_t i = 0; i < pop.n_users(); ++i) {
        double total = 0.0;
        for (std::size_t j = 0; j < 3; ++j) {
            CHECK(pop.lambda(i, j) >= 0.0);
            total += pop.lambda(i, j);
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }

    cfg.preference.kind = PreferenceKind::softmax_exposure;
    cfg.preference.dirichlet_alpha.clear();
    cfg.preference.softmax_intercept = {0.0, 0.0, 0.0};
    cfg.preference.gamma1 = {0.5};
    pop = generate_population(cfg);
    for (std::size_t i = 0; i < pop.n_users(); ++i) {
        double total = 0.0;
        for (std::size_t j = 0; j < 3; ++j) total += pop.lambda(i, j);
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("configuration validation names bad fields") {
    DGPConfig cfg = base_config();
    cfg.n_devices = 1;
    CHECK_THROWS_WITH_AS(generate_population(cfg), "n_devices: J must be at least 2",
                         ConfigError);

    cfg = base_config();
    cfg.noise_sigma = -1.0;
    CHECK_THROWS_AS(generate_population(cfg), ConfigError);

    cfg = base_config();
    cfg.beta_by_device = {{0.1}, {0.2}};  // both beta forms set
    CHECK_THROWS_AS(generate_population(cfg), ConfigError);

    cfg = base_config();
    cfg.beta1.clear();  // neither form set
    CHECK_THROWS_AS(generate_population(cfg), ConfigError);

    cfg = base_config();
    cfg.exposure.mean = {{-1.0}, {1.0}};
    CHECK_THROWS_AS(generate_population(cfg), ConfigError);

    cfg = base_config();
    cfg.preference.lambda = {0.9, 0.9};
    CHECK_THROWS_AS(generate_population(cfg), ConfigError);

    cfg = base_config();
    cfg.exposure.rho = 1.5;
    CHECK_THROWS_AS(generate_population(cfg), ConfigError);
}

TEST_CASE("attach_strata draws within the declared cardinalities") {
    DGPConfig cfg = base_config();
    cfg.n_users = 1000;
    Population pop = generate_population(cfg);
    StrataSpec spec;
    spec.variables.push_back({"msa", 48, false});
    spec.variables.push_back({"income", 10, false});
    pop = attach_strata(std::move(pop), spec);

    REQUIRE(pop.strata_names.size() == 2);
    CHECK(pop.strata_names[0] == "msa");
    bool saw_high_msa = false;
    for (std::size_t i = 0; i < 1000; ++i) {
        CHECK(pop.strata[0][i] >= 1);
        CHECK(pop.strata[0][i] <= 48);
        CHECK(pop.strata[1][i] >= 1);
        CHECK(pop.strata[1][i] <= 10);
        saw_high_msa = saw_high_msa || pop.strata[0][i] > 40;
    }
    CHECK(saw_high_msa);
}

TEST_CASE("attach_strata edge cases") {
    Population pop = generate_population(base_config());

    // empty spec: no-op
    Population same = attach_strata(pop, StrataSpec{});
    CHECK(same.strata_names.empty());

    // single global stratum
    StrataSpec one;
    one.variables.push_back({"g", 1, false});
    Population g = attach_strata(pop, one);
    for (int v : g.strata[0]) CHECK(v == 1);

    // unique key enumerates users
    StrataSpec uid;
    uid.variables.push_back({"uid", 0, true});
    Population u = attach_strata(pop, uid);
    for (std::size_t i = 0; i < u.n_users(); ++i) {
        CHECK(u.strata[0][i] == static_cast<int>(i) + 1);
    }

    // zero cardinality rejected
    StrataSpec bad;
    bad.variables.push_back({"broken", 0, false});
    CHECK_THROWS_AS(attach_strata(pop, bad), ConfigError);
}

TEST_CASE("strata draws are seed-deterministic") {
    StrataSpec spec;
    spec.variables.push_back({"msa", 48, false});
    Population a = attach_strata(generate_population(base_config()), spec);
    Population b = attach_strata(generate_population(base_config()), spec);
    for (std::size_t i = 0; i < a.n_users(); ++i) CHECK(a.strata[0][i] == b.strata[0][i]);
}
