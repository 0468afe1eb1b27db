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

#include "fraglab/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <thread>

#include "fraglab/errors.hpp"
#include "fraglab/fragmentation.hpp"
#include "fraglab/io.hpp"
#include "fraglab/kernels.hpp"
#include "fraglab/rng.hpp"

namespace fraglab::harness {

unsigned thread_cap() {
    if (const char* env = std::getenv("FRAGLAB_THREADS")) {
        long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

namespace {

// Per-user categorical assignment for one replication, using the rep's own
// substream. Mirrors fragmentation::draw_assignment but avoids rebuilding
// the probability rows on every call.
void draw_assignment_into(const linalg::Matrix& lambda, std::uint64_t master,
                          std::uint64_t rep, std::vector<int>& device) {
    rng::Engine eng(rng::derive_seed(master, rng::stream::mc_assignment(rep)),
                    rng::stream::assignment);
    const std::size_t n = lambda.rows();
    const std::size_t jd = lambda.cols();
    std::vector<double> row(jd);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < jd; ++j) row[j] = lambda(i, j);
        device[i] = static_cast<int>(eng.next_categorical(row));
    }
}

struct AnalyticExpectation {
    std::vector<std::string> terms;
    linalg::Vector expected;
};

// E[b-hat | X] per coefficient: Omega*beta plus the bias decomposition.
AnalyticExpectation analytic_expectation(const datagen::Population& pop,
                                         fragmentation::ModelForm form) {
    using fragmentation::ModelForm;
    const auto& cfg = pop.config;
    const std::size_t jd = pop.n_devices();
    const std::size_t k = pop.n_covariates();
    const double inv_j = 1.0 / static_cast<double>(jd);

    std::vector<linalg::Vector> betas;
    for (std::size_t j = 0; j < jd; ++j) {
        betas.push_back(cfg.device_specific() ? linalg::Vector(cfg.beta_by_device[j])
                                              : linalg::Vector(cfg.beta1));
    }

    AnalyticExpectation out;
    if (form == ModelForm::common_stacked) {
        if (cfg.device_specific()) {
            throw ConfigError("common-stacked Monte Carlo needs a common-effect truth");
        }
        biascalc::BiasDecomposition bias =
            biascalc::bias_common_J(pop.exposures, pop.lambda, cfg.beta0,
                                    linalg::Vector(cfg.beta1));
        out.terms.push_back("intercept");
        out.expected.push_back(cfg.beta0 * inv_j + bias.intercept_bias);
        for (std::size_t c = 0; c < k; ++c) {
            out.terms.push_back("x" + std::to_string(c + 1));
            out.expected.push_back(cfg.beta1[c] + bias.total_bias[c]);
        }
    } else if (form == ModelForm::device_specific_stacked) {
        biascalc::BiasDecomposition bias = biascalc::bias_device_specific_J_stacked(
            pop.exposures, pop.lambda, cfg.beta0, betas);
        out.terms.push_back("intercept");
        out.expected.push_back(cfg.beta0 * inv_j + bias.intercept_bias);
        for (std::size_t j = 0; j < jd; ++j) {
            for (std::size_t c = 0; c < k; ++c) {
                out.terms.push_back("x" + std::to_string(c + 1) + "_d" + std::to_string(j + 1));
                out.expected.push_back(betas[j][c] + bias.total_bias[j * k + c]);
            }
        }
    } else if (form == ModelForm::device_split) {
        biascalc::SplitBias bias = biascalc::bias_device_specific_J_split(
            pop.exposures, pop.lambda, cfg.beta0, betas);
        for (std::size_t j = 0; j < jd; ++j) {
            for (std::size_t c = 0; c < k; ++c) {
                out.terms.push_back("x" + std::to_string(c + 1) + "_d" + std::to_string(j + 1));
                out.expected.push_back(betas[j][c] + bias.bias[j][c]);
            }
        }
    } else {
        throw ConfigError("run_monte_carlo: unsupported model form");
    }
    return out;
}

}  // namespace

MCReport run_monte_carlo(const MonteCarloConfig& cfg) {
    using fragmentation::ModelForm;
    auto start = std::chrono::steady_clock::now();

    datagen::Population pop = datagen::generate_population(cfg.dgp);
    const std::size_t n = pop.n_users();
    const std::size_t jd = pop.n_devices();
    const std::size_t reps = cfg.reps;
    if (reps < 1) throw ConfigError("run_monte_carlo: reps must be at least 1");
    const std::uint64_t master = cfg.mc_seed.value_or(cfg.dgp.seed);

    AnalyticExpectation analytic = analytic_expectation(pop, cfg.form);

    // Noise-free base outcome; each rep adds its own eps draw.
    linalg::Vector base = linalg::subtract(pop.outcomes, pop.noise);

    // The design is fixed across replications: factorize once per form.
    fragmentation::AssignmentMatrix a0;
    a0.n_devices = jd;
    a0.device.assign(n, 0);
    fragmentation::FragmentedDataset proto = fragmentation::fragment(pop, a0);

    std::vector<linalg::LeastSquares> solvers;
    // Row map: fragment row index for (user, device) in each solver's design.
    // common/device-stacked: one solver over all rows (user-major order);
    // device-split: one solver per device, rows in user order.
    std::optional<ModelForm> stacked_form;
    if (cfg.form == ModelForm::common_stacked) {
        solvers.emplace_back(fragmentation::stack_common(proto).x);
        stacked_form = cfg.form;
    } else if (cfg.form == ModelForm::device_specific_stacked) {
        solvers.emplace_back(fragmentation::stack_device_specific(proto).x);
        stacked_form = cfg.form;
    } else {
        for (auto& design : fragmentation::split_by_device(proto)) {
            solvers.emplace_back(design.x);
        }
    }

    const std::size_t n_terms = analytic.terms.size();
    linalg::Matrix slots(reps, n_terms);

    auto run_range = [&](std::size_t rep_begin, std::size_t rep_end) {
        std::vector<int> device(n);
        linalg::Vector y_user(n);
        if (stacked_form) {
            linalg::Vector y_tilde(n * jd, 0.0);
            for (std::size_t rep = rep_begin; rep < rep_end; ++rep) {
                rng::Engine noise_eng(rng::derive_seed(master, rng::stream::mc_noise(rep)),
                                      rng::stream::noise);
                for (std::size_t i = 0; i < n; ++i) {
                    y_user[i] = base[i] + (cfg.dgp.noise_sigma > 0.0
                                               ? cfg.dgp.noise_sigma * noise_eng.next_normal()
                                               : 0.0);
                }
                draw_assignment_into(pop.lambda, master, rep, device);
                for (std::size_t i = 0; i < n; ++i) {
                    for (std::size_t j = 0; j < jd; ++j) {
                        y_tilde[i * jd + j] =
                            device[i] == static_cast<int>(j) ? y_user[i] : 0.0;
                    }
                }
                linalg::Vector coef = solvers[0].solve(y_tilde);
                for (std::size_t t = 0; t < n_terms; ++t) slots(rep, t) = coef[t];
            }
        } else {
            linalg::Vector y_dev(n);
            const std::size_t k = pop.n_covariates();
            for (std::size_t rep = rep_begin; rep < rep_end; ++rep) {
                rng::Engine noise_eng(rng::derive_seed(master, rng::stream::mc_noise(rep)),
                                      rng::stream::noise);
                for (std::size_t i = 0; i < n; ++i) {
                    y_user[i] = base[i] + (cfg.dgp.noise_sigma > 0.0
                                               ? cfg.dgp.noise_sigma * noise_eng.next_normal()
                                               : 0.0);
                }
                draw_assignment_into(pop.lambda, master, rep, device);
                for (std::size_t j = 0; j < jd; ++j) {
                    for (std::size_t i = 0; i < n; ++i) {
                        y_dev[i] = device[i] == static_cast<int>(j) ? y_user[i] : 0.0;
                    }
                    linalg::Vector coef = solvers[j].solve(y_dev);
                    // Slot layout matches analytic terms: slopes only, skipping
                    // the per-device intercepts.
                    for (std::size_t c = 0; c < k; ++c) {
                        slots(rep, j * k + c) = coef[1 + c];
                    }
                }
            }
        }
    };

    unsigned workers = std::min<unsigned>(thread_cap(), static_cast<unsigned>(reps));
    if (workers <= 1) {
        run_range(0, reps);
    } else {
        std::vector<std::thread> pool;
        std::size_t chunk = (reps + workers - 1) / workers;
        for (unsigned w = 0; w < workers; ++w) {
            std::size_t b = w * chunk;
            std::size_t e = std::min(reps, b + chunk);
            if (b >= e) break;
            pool.emplace_back(run_range, b, e);
        }
        for (auto& t : pool) t.join();
    }

    MCReport report;
    report.form_name = fragmentation::model_form_name(cfg.form);
    report.reps = reps;
    const double dm = static_cast<double>(reps);
    for (std::size_t t = 0; t < n_terms; ++t) {
        MCRow row;
        row.term = analytic.terms[t];
        row.analytic_expected = analytic.expected[t];
        row.mc_mean = kernels::sum(slots.col(t), reps) / dm;
        double ss = 0.0;
        const double* col = slots.col(t);
        for (std::size_t r = 0; r < reps; ++r) {
            double d = col[r] - row.mc_mean;
            ss += d * d;
        }
        double sd = reps > 1 ? std::sqrt(ss / (dm - 1.0)) : 0.0;
        row.mc_se = sd / std::sqrt(dm);
        if (row.mc_se > 0.0) {
            row.z = (row.mc_mean - row.analytic_expected) / row.mc_se;
        } else {
            row.z = (row.mc_mean == row.analytic_expected) ? 0.0
                    : std::numeric_limits<double>::infinity();
        }
        row.pass = std::abs(row.z) <= cfg.z_threshold;
        report.rows.push_back(std::move(row));
    }
    report.all_pass = true;
    for (const auto& row : report.rows) report.all_pass = report.all_pass && row.pass;
    report.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

void write_mc_csv(const std::string& path, const MCReport& report) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open '" + path + "' for writing");
    out << "term,analytic_expected,mc_mean,mc_se,z_score,pass\n";
    for (const auto& row : report.rows) {
        out << row.term << ',' << io::format_double(row.analytic_expected) << ','
            << io::format_double(row.mc_mean) << ',' << io::format_double(row.mc_se) << ','
            << io::format_double(row.z) << ',' << (row.pass ? 1 : 0) << "\n";
    }
}

}  // namespace fraglab::harness
