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

#include "fraglab/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fraglab/errors.hpp"
#include "fraglab/rng.hpp"

namespace fraglab::estimators {

EstimateReport ols(const DesignMatrices& design) {
    const std::size_t rows = design.x.rows();
    const std::size_t params = design.x.cols();
    if (rows < params) {
        throw ConfigError("ols: fewer rows than parameters");
    }

    linalg::LeastSquares ls(design.x);
    EstimateReport rep;
    rep.form = design.form;
    rep.terms = design.terms;
    rep.n_rows = rows;
    rep.n_params = params;
    rep.condition_number = ls.condition_number();
    rep.coefficients = ls.solve(design.y, rep.rss);
    // rows == params interpolates exactly; sigma2 and the SEs are undefined.
    rep.sigma2_hat = rows > params
                         ? rep.rss / static_cast<double>(rows - params)
                         : std::numeric_limits<double>::quiet_NaN();

    linalg::Matrix xtx_inv = ls.xtx_inverse();
    rep.standard_errors.resize(params);
    rep.ci95.resize(params);
    for (std::size_t i = 0; i < params; ++i) {
        rep.standard_errors[i] = std::sqrt(std::max(rep.sigma2_hat * xtx_inv(i, i), 0.0));
        double half = 1.96 * rep.standard_errors[i];
        rep.ci95[i] = {rep.coefficients[i] - half, rep.coefficients[i] + half};
    }
    return rep;
}

EstimateReport estimate_true(const datagen::Population& pop, ModelForm form) {
    switch (form) {
        case ModelForm::true_common:
            return ols(fragmentation::design_true_common(pop));
        case ModelForm::true_device_specific:
            return ols(fragmentation::design_true_device_specific(pop));
        default:
            throw ConfigError("estimate_true: form must be true-common or true-device-specific");
    }
}

EstimateReport estimate_fragmented(const FragmentView& f, ModelForm form) {
    switch (form) {
        case ModelForm::common_stacked:
            return ols(fragmentation::stack_common(f));
        case ModelForm::device_specific_stacked:
            return ols(fragmentation::stack_device_specific(f));
        default:
            throw ConfigError(
                "estimate_fragmented: form must be common-stacked or device-specific-stacked "
                "(use estimate_fragmented_split for per-device fits)");
    }
}

std::vector<EstimateReport> estimate_fragmented_split(const FragmentView& f) {
    std::vector<EstimateReport> out;
    for (const auto& design : fragmentation::split_by_device(f)) {
        out.push_back(ols(design));
    }
    return out;
}

MixedEstimateReport estimate_mixed(const datagen::Population& pop,
                                   const fragmentation::AssignmentMatrix& a, double r,
                                   std::optional<std::uint64_t> selection_seed) {
    if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("estimate_mixed: r must lie in [0,1]");
    const std::size_t n = pop.n_users();
    const std::size_t j_devices = pop.n_devices();
    const std::size_t k = pop.n_covariates();
    const std::size_t p = 1 + k;
    const std::size_t n_frag =
        static_cast<std::size_t>(std::llround(r * static_cast<double>(n)));

    // Seed-deterministic subset: partial Fisher-Yates over user indices.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng::Engine eng(selection_seed.value_or(pop.config.seed), rng::stream::selection);
    for (std::size_t i = 0; i < n_frag && i + 1 < n; ++i) {
        std::size_t pick = i + eng.next_below(n - i);
        std::swap(order[i], order[pick]);
    }
    std::vector<bool> fragmented(n, false);
    for (std::size_t i = 0; i < n_frag; ++i) fragmented[order[i]] = true;

    linalg::Matrix total = pop.total_exposure();
    const std::size_t pooled_rows = n_frag * j_devices + (n - n_frag);

    DesignMatrices pooled;
    pooled.form = ModelForm::mixed_pooled;
    pooled.group_size = 1;
    pooled.x = linalg::Matrix(pooled_rows, p, 0.0);
    pooled.y.assign(pooled_rows, 0.0);
    pooled.terms.push_back("intercept");
    for (std::size_t c = 0; c < k; ++c) pooled.terms.push_back("x" + std::to_string(c + 1));

    DesignMatrices frag_part;
    frag_part.form = ModelForm::common_stacked;
    frag_part.group_size = j_devices;
    frag_part.x = linalg::Matrix(n_frag * j_devices, p, 0.0);
    frag_part.y.assign(n_frag * j_devices, 0.0);
    frag_part.terms = pooled.terms;

    DesignMatrices linked_part;
    linked_part.form = ModelForm::true_common;
    linked_part.group_size = 1;
    linked_part.x = linalg::Matrix(n - n_frag, p, 0.0);
    linked_part.y.assign(n - n_frag, 0.0);
    linked_part.terms = pooled.terms;

    std::size_t pr = 0, fr = 0, lr = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (fragmented[i]) {
            for (std::size_t j = 0; j < j_devices; ++j) {
                double yij = (a.device[i] == static_cast<int>(j)) ? pop.outcomes[i] : 0.0;
                pooled.x(pr, 0) = 1.0;
                frag_part.x(fr, 0) = 1.0;
                for (std::size_t c = 0; c < k; ++c) {
                    pooled.x(pr, 1 + c) = pop.exposures[j](i, c);
                    frag_part.x(fr, 1 + c) = pop.exposures[j](i, c);
                }
                pooled.y[pr++] = yij;
                frag_part.y[fr++] = yij;
            }
        } else {
            pooled.x(pr, 0) = 1.0;
            linked_part.x(lr, 0) = 1.0;
            for (std::size_t c = 0; c < k; ++c) {
                pooled.x(pr, 1 + c) = total(i, c);
                linked_part.x(lr, 1 + c) = total(i, c);
            }
            pooled.y[pr++] = pop.outcomes[i];
            linked_part.y[lr++] = pop.outcomes[i];
        }
    }

    MixedEstimateReport rep;
    rep.r = r;
    rep.n_fragmented_users = n_frag;
    if (r > 0.0 && n_frag == 0) {
        rep.rounding_note = "r > 0 rounded to an empty fragmented subset (r*n < 1)";
    }
    rep.pooled = ols(pooled);
    rep.beta_mixed = rep.pooled.coefficients;

    // omega = (Gf + Gl)^{-1} Gf with the exact sub-design Grams; the pure
    // estimators then recombine to the pooled one (Durbin-Theil).
    linalg::Matrix gram_f = n_frag > 0 ? linalg::transpose_times(frag_part.x, frag_part.x)
                                       : linalg::Matrix(p, p, 0.0);
    linalg::Matrix gram_l = (n - n_frag) > 0
                                ? linalg::transpose_times(linked_part.x, linked_part.x)
                                : linalg::Matrix(p, p, 0.0);
    rep.omega = linalg::spd_solve(linalg::add(gram_f, gram_l), gram_f);

    linalg::Vector combo(p, 0.0);
    if (n_frag > 0) {
        linalg::LeastSquares ls_f(frag_part.x);
        rep.beta_fragmented_only = ls_f.solve(frag_part.y);
        combo = linalg::multiply(rep.omega, rep.beta_fragmented_only);
    }
    if (n - n_frag > 0) {
        linalg::LeastSquares ls_l(linked_part.x);
        rep.beta_linked_only = ls_l.solve(linked_part.y);
        linalg::Matrix i_minus_omega = linalg::subtract(linalg::Matrix::identity(p), rep.omega);
        combo = linalg::add(combo, linalg::multiply(i_minus_omega, rep.beta_linked_only));
    }
    rep.identity_gap = linalg::max_abs(linalg::subtract(rep.beta_mixed, combo));
    return rep;
}

}  // namespace fraglab::estimators
