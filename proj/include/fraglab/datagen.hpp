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

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fraglab/linalg.hpp"

// Synthetic population generation for the linear exposure-outcome model
//
//   y = b0 + sum_j X_j * b        (common effect), or
//   y = b0 + sum_j X_j * b_j      (device-specific effect),
//
// with per-device exposure matrices generated natively, an independent noise
// stream, and per-user device-preference probabilities on the simplex.

namespace fraglab::datagen {

enum class ExposureFamily { poisson, lognormal_rounded, fixed_matrix };

struct ExposureSpec {
    ExposureFamily family = ExposureFamily::poisson;
    // mean[j][c], variance[j][c]: device j, covariate c. Poisson ignores
    // variance (it equals the mean).
    std::vector<std::vector<double>> mean;
    std::vector<std::vector<double>> variance;
    // Cross-device correlation of the same covariate, realized through an
    // equicorrelated Gaussian copula before the marginal transform.
    double rho = 0.0;
    // fixed_matrix family: exposures injected verbatim, one matrix per device.
    std::vector<linalg::Matrix> fixed;
};

enum class PreferenceKind {
    constant,          // one probability vector shared by all users
    logistic_gap,      // J=2 only: lambda_i = sigmoid(g0 + g1'(x_i1 - x_i2))
    dirichlet,         // per-user vectors drawn from Dirichlet(alpha)
    softmax_exposure,  // lambda_ij proportional to exp(g0_j + g1'x_ij)
    external           // ingested data; probabilities unknown
};

struct PreferenceSpec {
    PreferenceKind kind = PreferenceKind::constant;
    std::vector<double> lambda;             // constant
    double gamma0 = 0.0;                    // logistic_gap
    std::vector<double> gamma1;             // logistic_gap / softmax_exposure slope
    std::vector<double> dirichlet_alpha;    // dirichlet
    std::vector<double> softmax_intercept;  // softmax_exposure, length J
};

struct DGPConfig {
    std::size_t n_users = 0;
    std::size_t n_devices = 2;     // J
    std::size_t n_covariates = 1;  // k
    double beta0 = 0.0;
    // Exactly one of these is set: beta1 (common effect, length k) or
    // beta_by_device (J vectors of length k).
    std::vector<double> beta1;
    std::vector<std::vector<double>> beta_by_device;
    ExposureSpec exposure;
    double noise_sigma = 0.0;
    PreferenceSpec preference;
    std::uint64_t seed = 0;

    bool device_specific() const { return !beta_by_device.empty(); }
    // Throws ConfigError naming the offending field.
    void validate() const;
};

struct StrataVariable {
    std::string name;
    std::size_t cardinality = 0;
    // Assigns value = user index + 1 instead of a uniform draw; gives the
    // perfect-strata key used by the aggregation equivalence checks.
    bool unique_key = false;
};

struct StrataSpec {
    std::vector<StrataVariable> variables;
};

struct Population {
    std::vector<linalg::Matrix> exposures;  // J matrices, n x k
    linalg::Vector outcomes;                // y
    linalg::Vector noise;                   // retained for oracle use
    // Realized per-user preference probabilities, n x J rows on the simplex.
    // Empty for ingested data with unknown preferences.
    linalg::Matrix lambda;
    PreferenceSpec preference;
    std::vector<std::string> strata_names;
    std::vector<std::vector<int>> strata;  // per variable, per user, 1-based
    DGPConfig config;

    std::size_t n_users() const { return outcomes.size(); }
    std::size_t n_devices() const { return exposures.size(); }
    std::size_t n_covariates() const { return exposures.empty() ? 0 : exposures.front().cols(); }
    linalg::Matrix total_exposure() const;  // sum_j X_j, n x k
};

Population generate_population(const DGPConfig& config);

// Adds seed-deterministic categorical strata columns. All fragments of a user
// inherit the user's values downstream because strata live on the population.
Population attach_strata(Population pop, const StrataSpec& spec);

// Per-user preference vectors implied by a spec at given exposures. Used both
// during generation and by the analytic-bias path (E[s|X] is known exactly
// for every built-in kind).
linalg::Matrix preference_lambda(const PreferenceSpec& pref,
                                 const std::vector<linalg::Matrix>& exposures,
                                 std::optional<std::uint64_t> dirichlet_seed = std::nullopt);

}  // namespace fraglab::datagen
