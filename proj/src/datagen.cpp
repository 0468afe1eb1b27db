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

#include "fraglab/datagen.hpp"

#include <cmath>
#include <string>

#include "fraglab/errors.hpp"
#include "fraglab/rng.hpp"

namespace fraglab::datagen {

namespace {

void validate_exposure(const ExposureSpec& e, std::size_t j_devices, std::size_t k) {
    if (e.family == ExposureFamily::fixed_matrix) {
        if (e.fixed.size() != j_devices) {
            throw ConfigError("exposure_spec.fixed: expected one matrix per device");
        }
        for (const auto& m : e.fixed) {
            if (m.cols() != k) throw ConfigError("exposure_spec.fixed: covariate count mismatch");
            if (m.rows() != e.fixed.front().rows()) {
                throw ConfigError("exposure_spec.fixed: inconsistent row counts");
            }
        }
        return;
    }
    if (e.mean.size() != j_devices) {
        throw ConfigError("exposure_spec.mean: expected one entry per device");
    }
    for (const auto& row : e.mean) {
        if (row.size() != k) throw ConfigError("exposure_spec.mean: covariate count mismatch");
        for (double m : row) {
            if (!(m >= 0.0) || !std::isfinite(m)) {
                throw ConfigError("exposure_spec.mean: means must be nonnegative");
            }
        }
    }
    if (e.family == ExposureFamily::lognormal_rounded) {
        if (e.variance.size() != j_devices) {
            throw ConfigError("exposure_spec.variance: expected one entry per device");
        }
        for (const auto& row : e.variance) {
            if (row.size() != k) throw ConfigError("exposure_spec.variance: covariate count mismatch");
            for (double v : row) {
                if (!(v > 0.0) || !std::isfinite(v)) {
                    throw ConfigError("exposure_spec.variance: variances must be positive");
                }
            }
        }
    }
    if (std::abs(e.rho) > 1.0) throw ConfigError("exposure_spec.rho: |rho| must be <= 1");
    // Equicorrelation is positive semidefinite only down to -1/(J-1).
    if (e.rho < 0.0 && e.rho < -1.0 / static_cast<double>(j_devices - 1)) {
        throw ConfigError("exposure_spec.rho: below -1/(J-1), not a valid correlation");
    }
}

void validate_preference(const PreferenceSpec& p, std::size_t j_devices, std::size_t k) {
    switch (p.kind) {
        case PreferenceKind::constant: {
            if (p.lambda.size() != j_devices) {
                throw ConfigError("preference_spec.lambda: expected one probability per device");
            }
            double total = 0.0;
            for (double v : p.lambda) {
                if (!(v >= 0.0 && v <= 1.0)) {
                    throw ConfigError("preference_spec.lambda: probabilities must lie in [0,1]");
                }
                total += v;
            }
            if (std::abs(total - 1.0) > 1e-9) {
                throw ConfigError("preference_spec.lambda: probabilities must sum to 1");
            }
            return;
        }
        case PreferenceKind::logistic_gap:
            if (j_devices != 2) {
                throw ConfigError("preference_spec: logistic-in-exposure-gap requires J = 2");
            }
            if (p.gamma1.size() != k) {
                throw ConfigError("preference_spec.gamma1: expected one coefficient per covariate");
            }
            return;
        case PreferenceKind::dirichlet:
            if (p.dirichlet_alpha.size() != j_devices) {
                throw ConfigError("preference_spec.dirichlet_alpha: expected one value per device");
            }
            for (double a : p.dirichlet_alpha) {
                if (!(a > 0.0)) {
                    throw ConfigError("preference_spec.dirichlet_alpha: concentrations must be positive");
                }
            }
            return;
        case PreferenceKind::softmax_exposure:
            if (p.softmax_intercept.size() != j_devices) {
                throw ConfigError("preference_spec.softmax_intercept: expected one value per device");
            }
            if (p.gamma1.size() != k) {
                throw ConfigError("preference_spec.gamma1: expected one coefficient per covariate");
            }
            return;
        case PreferenceKind::external:
            return;
    }
}

// Lognormal parameters (m, s) matching a target mean and variance.
void lognormal_params(double mean, double variance, double& m, double& s) {
    double s2 = std::log(1.0 + variance / (mean * mean));
    s = std::sqrt(s2);
    m = std::log(mean) - 0.5 * s2;
}

// Poisson quantile by CDF accumulation; u in [0, 1).
long poisson_icdf(double u, double mu) {
    double p = std::exp(-mu);
    double cdf = p;
    long x = 0;
    while (u >= cdf && x < 100000) {
        ++x;
        p *= mu / static_cast<double>(x);
        cdf += p;
        if (p == 0.0) break;
    }
    return x;
}

}  // namespace

void DGPConfig::validate() const {
    if (n_users == 0) throw ConfigError("n_users: must be positive");
    if (n_devices < 2) throw ConfigError("n_devices: J must be at least 2");
    if (n_covariates < 1) throw ConfigError("n_covariates: k must be at least 1");
    if (!(noise_sigma >= 0.0)) throw ConfigError("noise_sigma: must be nonnegative");
    bool has_common = !beta1.empty();
    bool has_device = !beta_by_device.empty();
    if (has_common == has_device) {
        throw ConfigError("exactly one of beta1 / beta_by_device must be set");
    }
    if (has_common && beta1.size() != n_covariates) {
        throw ConfigError("beta1: length must equal n_covariates");
    }
    if (has_device) {
        if (beta_by_device.size() != n_devices) {
            throw ConfigError("beta_by_device: expected one vector per device");
        }
        for (const auto& b : beta_by_device) {
            if (b.size() != n_covariates) {
                throw ConfigError("beta_by_device: each vector must have length n_covariates");
            }
        }
    }
    validate_exposure(exposure, n_devices, n_covariates);
    validate_preference(preference, n_devices, n_covariates);
}

linalg::Matrix Population::total_exposure() const {
    linalg::Matrix total(n_users(), n_covariates());
    for (const auto& xj : exposures) {
        total = linalg::add(total, xj);
    }
    return total;
}

linalg::Matrix preference_lambda(const PreferenceSpec& pref,
                                 const std::vector<linalg::Matrix>& exposures,
                                 std::optional<std::uint64_t> dirichlet_seed) {
    const std::size_t j_devices = exposures.size();
    const std::size_t n = exposures.front().rows();
    const std::size_t k = exposures.front().cols();
    linalg::Matrix lam(n, j_devices);

    switch (pref.kind) {
        case PreferenceKind::constant:
            for (std::size_t j = 0; j < j_devices; ++j) {
                for (std::size_t i = 0; i < n; ++i) lam(i, j) = pref.lambda[j];
            }
            return lam;
        case PreferenceKind::logistic_gap:
            for (std::size_t i = 0; i < n; ++i) {
                double score = pref.gamma0;
                for (std::size_t c = 0; c < k; ++c) {
                    score += pref.gamma1[c] * (exposures[0](i, c) - exposures[1](i, c));
                }
                double p = 1.0 / (1.0 + std::exp(-score));
                lam(i, 0) = p;
                lam(i, 1) = 1.0 - p;
            }
            return lam;
        case PreferenceKind::softmax_exposure:
            for (std::size_t i = 0; i < n; ++i) {
                double max_score = -1e300;
                std::vector<double> scores(j_devices);
                for (std::size_t j = 0; j < j_devices; ++j) {
                    double s = pref.softmax_intercept[j];
                    for (std::size_t c = 0; c < k; ++c) s += pref.gamma1[c] * exposures[j](i, c);
                    scores[j] = s;
                    max_score = std::max(max_score, s);
                }
                double total = 0.0;
                for (std::size_t j = 0; j < j_devices; ++j) {
                    scores[j] = std::exp(scores[j] - max_score);
                    total += scores[j];
                }
                for (std::size_t j = 0; j < j_devices; ++j) lam(i, j) = scores[j] / total;
            }
            return lam;
        case PreferenceKind::dirichlet: {
            if (!dirichlet_seed) {
                throw ConfigError("per-user-heterogeneous preferences need a seed to realize");
            }
            rng::Engine eng(*dirichlet_seed, rng::stream::dirichlet);
            for (std::size_t i = 0; i < n; ++i) {
                double total = 0.0;
                for (std::size_t j = 0; j < j_devices; ++j) {
                    lam(i, j) = eng.next_gamma(pref.dirichlet_alpha[j]);
                    total += lam(i, j);
                }
                for (std::size_t j = 0; j < j_devices; ++j) lam(i, j) /= total;
            }
            return lam;
        }
        case PreferenceKind::external:
            throw ConfigError("preference probabilities unknown for external data");
    }
    throw ConfigError("unknown preference kind");
}

Population generate_population(const DGPConfig& config) {
    config.validate();
    const std::size_t n = config.n_users;
    const std::size_t j_devices = config.n_devices;
    const std::size_t k = config.n_covariates;

    Population pop;
    pop.config = config;
    pop.preference = config.preference;

    // Exposures.
    pop.exposures.assign(j_devices, linalg::Matrix(n, k));
    const ExposureSpec& e = config.exposure;
    if (e.family == ExposureFamily::fixed_matrix) {
        if (e.fixed.front().rows() != n) {
            throw ConfigError("exposure_spec.fixed: row count must equal n_users");
        }
        pop.exposures = e.fixed;
    } else {
        rng::Engine eng(config.seed, rng::stream::exposure);
        const double rho = e.rho;
        const double sr = rho >= 0.0 ? std::sqrt(rho) : 0.0;
        const double sq = rho >= 0.0 ? std::sqrt(1.0 - rho) : 0.0;
        // Negative rho needs the full Cholesky of the equicorrelation matrix;
        // nonnegative rho uses the cheaper common-factor construction.
        linalg::Matrix chol;
        if (rho < 0.0) {
            linalg::Matrix corr(j_devices, j_devices, rho);
            for (std::size_t j = 0; j < j_devices; ++j) corr(j, j) = 1.0;
            chol = linalg::Matrix(j_devices, j_devices);
            for (std::size_t i = 0; i < j_devices; ++i) {
                for (std::size_t j = 0; j <= i; ++j) {
                    double s = 0.0;
                    for (std::size_t t = 0; t < j; ++t) s += chol(i, t) * chol(j, t);
                    if (i == j) {
                        chol(i, j) = std::sqrt(std::max(corr(i, i) - s, 0.0));
                    } else {
                        chol(i, j) = (corr(i, j) - s) / chol(j, j);
                    }
                }
            }
        }
        std::vector<double> g(j_devices);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t c = 0; c < k; ++c) {
                // Correlated standard normals across devices for covariate c.
                std::vector<double> z(j_devices);
                if (rho >= 0.0) {
                    double common = eng.next_normal();
                    for (std::size_t j = 0; j < j_devices; ++j) {
                        z[j] = sr * common + sq * eng.next_normal();
                    }
                } else {
                    for (std::size_t j = 0; j < j_devices; ++j) g[j] = eng.next_normal();
                    for (std::size_t j = 0; j < j_devices; ++j) {
                        double acc = 0.0;
                        for (std::size_t t = 0; t <= j; ++t) acc += chol(j, t) * g[t];
                        z[j] = acc;
                    }
                }
                for (std::size_t j = 0; j < j_devices; ++j) {
                    if (e.family == ExposureFamily::poisson) {
                        double u = rng::normal_cdf(z[j]);
                        pop.exposures[j](i, c) =
                            static_cast<double>(poisson_icdf(u, e.mean[j][c]));
                    } else {
                        double m, s;
                        lognormal_params(e.mean[j][c], e.variance[j][c], m, s);
                        pop.exposures[j](i, c) = std::round(std::exp(m + s * z[j]));
                    }
                }
            }
        }
    }

    // Preference probabilities; Dirichlet realizations consume their own stream.
    pop.lambda = preference_lambda(config.preference, pop.exposures, config.seed);

    // Noise is drawn from a stream disjoint from exposures and assignments,
    // which gives E[eps|X] = 0 and s independent of eps by construction.
    pop.noise.assign(n, 0.0);
    if (config.noise_sigma > 0.0) {
        rng::Engine eng(config.seed, rng::stream::noise);
        for (std::size_t i = 0; i < n; ++i) {
            pop.noise[i] = config.noise_sigma * eng.next_normal();
        }
    }

    // Outcomes, row-exactly: y = b0 + sum_j x_ij' b(_j) + eps.
    pop.outcomes.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double y = config.beta0;
        for (std::size_t j = 0; j < j_devices; ++j) {
            const auto& b = config.device_specific() ? config.beta_by_device[j] : config.beta1;
            for (std::size_t c = 0; c < k; ++c) {
                y += pop.exposures[j](i, c) * b[c];
            }
        }
        pop.outcomes[i] = y + pop.noise[i];
    }

    return pop;
}

Population attach_strata(Population pop, const StrataSpec& spec) {
    if (spec.variables.empty()) return pop;
    rng::Engine eng(pop.config.seed, rng::stream::strata);
    for (const auto& var : spec.variables) {
        if (!var.unique_key && var.cardinality == 0) {
            throw ConfigError("strata variable '" + var.name + "': cardinality must be positive");
        }
        std::vector<int> values(pop.n_users());
        for (std::size_t i = 0; i < pop.n_users(); ++i) {
            values[i] = var.unique_key
                            ? static_cast<int>(i) + 1
                            : static_cast<int>(eng.next_below(var.cardinality)) + 1;
        }
        pop.strata_names.push_back(var.name);
        pop.strata.push_back(std::move(values));
    }
    return pop;
}

}  // namespace fraglab::datagen
