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

#include "fraglab/correctives.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "fraglab/errors.hpp"

namespace fraglab::correctives {

linalg::Vector AggregatedDataset::common_x_sum(const Bin& bin) const {
    linalg::Vector out(n_covariates, 0.0);
    for (std::size_t j = 0; j < n_devices; ++j) {
        for (std::size_t c = 0; c < n_covariates; ++c) {
            out[c] += bin.x_sum_device[j * n_covariates + c];
        }
    }
    return out;
}

AggregatedDataset aggregate_strata(const fragmentation::FragmentedDataset& f,
                                   const std::vector<std::string>& vars,
                                   std::int64_t min_bin_rows) {
    if (vars.empty()) throw ConfigError("aggregate_strata: no strata variables given");
    std::vector<std::size_t> var_idx;
    for (const auto& name : vars) {
        auto it = std::find(f.strata_names.begin(), f.strata_names.end(), name);
        if (it == f.strata_names.end()) {
            throw ConfigError("aggregate_strata: unknown strata variable '" + name + "'");
        }
        var_idx.push_back(static_cast<std::size_t>(it - f.strata_names.begin()));
    }

    struct Acc {
        double y_sum = 0.0;
        linalg::Vector x_sum;
        std::int64_t n_fragments = 0;
        std::set<std::int64_t> users;
    };
    std::map<std::vector<int>, Acc> groups;  // ordered: deterministic output

    const std::size_t jk = f.n_devices * f.n_covariates;
    std::vector<int> key(vars.size());
    for (std::size_t r = 0; r < f.n_fragments(); ++r) {
        for (std::size_t v = 0; v < var_idx.size(); ++v) key[v] = f.strata[var_idx[v]][r];
        Acc& acc = groups[key];
        if (acc.x_sum.empty()) acc.x_sum.assign(jk, 0.0);
        acc.y_sum += f.y[r];
        const std::size_t j = static_cast<std::size_t>(f.device[r]);
        for (std::size_t c = 0; c < f.n_covariates; ++c) {
            acc.x_sum[j * f.n_covariates + c] += f.x(r, c);
        }
        acc.n_fragments += 1;
        if (f.has_oracle()) acc.users.insert(f.oracle_user[r]);
    }

    AggregatedDataset agg;
    agg.binning_vars = vars;
    agg.n_devices = f.n_devices;
    agg.n_covariates = f.n_covariates;
    for (auto& [k, acc] : groups) {
        if (acc.n_fragments < min_bin_rows) {
            agg.dropped_bins += 1;
            agg.dropped_fragments += acc.n_fragments;
            continue;
        }
        AggregatedDataset::Bin bin;
        bin.key = k;
        bin.y_sum = acc.y_sum;
        bin.x_sum_device = std::move(acc.x_sum);
        bin.n_fragments = acc.n_fragments;
        bin.n_users_oracle = f.has_oracle() ? static_cast<std::int64_t>(acc.users.size()) : -1;
        agg.bins.push_back(std::move(bin));
    }
    if (agg.bins.empty()) throw ConfigError("aggregate_strata: no bins survived");
    return agg;
}

estimators::EstimateReport estimate_aggregated(const AggregatedDataset& agg,
                                               fragmentation::ModelForm form,
                                               bool plain_intercept) {
    using fragmentation::ModelForm;
    const std::size_t bins = agg.bins.size();
    const std::size_t k = agg.n_covariates;
    const std::size_t jd = agg.n_devices;

    fragmentation::DesignMatrices design;
    design.group_size = 1;
    design.y.resize(bins);

    const std::size_t params =
        (form == ModelForm::aggregated_device_specific ||
         form == ModelForm::true_device_specific ||
         form == ModelForm::device_specific_stacked)
            ? 1 + jd * k
            : 1 + k;
    if (bins < params + 1) {
        throw ConfigError("estimate_aggregated: needs at least params + 1 bins "
                          "(standard errors undefined at an exact fit)");
    }

    // The naive aggregator cannot count users, but every source unit carries
    // exactly J fragments, so n_fragments / J is the bin's member count.
    auto intercept_value = [&](const AggregatedDataset::Bin& bin) {
        if (plain_intercept) return 1.0;
        return static_cast<double>(bin.n_fragments) / static_cast<double>(jd);
    };

    if (form == ModelForm::aggregated_common || form == ModelForm::true_common ||
        form == ModelForm::common_stacked) {
        design.form = ModelForm::aggregated_common;
        design.x = linalg::Matrix(bins, 1 + k, 0.0);
        design.terms.push_back("intercept");
        for (std::size_t c = 0; c < k; ++c) design.terms.push_back("x" + std::to_string(c + 1));
        for (std::size_t b = 0; b < bins; ++b) {
            design.y[b] = agg.bins[b].y_sum;
            design.x(b, 0) = intercept_value(agg.bins[b]);
            linalg::Vector xs = agg.common_x_sum(agg.bins[b]);
            for (std::size_t c = 0; c < k; ++c) design.x(b, 1 + c) = xs[c];
        }
    } else if (form == ModelForm::aggregated_device_specific ||
               form == ModelForm::true_device_specific ||
               form == ModelForm::device_specific_stacked) {
        design.form = ModelForm::aggregated_device_specific;
        design.x = linalg::Matrix(bins, 1 + jd * k, 0.0);
        design.terms.push_back("intercept");
        for (std::size_t j = 0; j < jd; ++j) {
            for (std::size_t c = 0; c < k; ++c) {
                design.terms.push_back("x" + std::to_string(c + 1) + "_d" + std::to_string(j + 1));
            }
        }
        for (std::size_t b = 0; b < bins; ++b) {
            design.y[b] = agg.bins[b].y_sum;
            design.x(b, 0) = intercept_value(agg.bins[b]);
            for (std::size_t t = 0; t < jd * k; ++t) {
                design.x(b, 1 + t) = agg.bins[b].x_sum_device[t];
            }
        }
    } else {
        throw ConfigError("estimate_aggregated: unsupported model form");
    }

    return estimators::ols(design);
}

DebiasReport debias_stc(const estimators::EstimateReport& raw, double j_used,
                        const biascalc::STCReport& stc, bool force,
                        std::optional<estimators::EstimateReport> matched) {
    if (!(j_used >= 1.0)) throw ConfigError("debias_stc: J must be at least 1");
    if (!stc.satisfied() && !force) {
        std::string failed;
        if (!stc.mean_ok) failed += " first-moment-gap";
        if (!stc.second_moment_ok) failed += " second-moment-gap";
        if (!stc.independence_ok) failed += " cross-fragment-correlation";
        if (!stc.lambda_ok) failed += " exposure-dependent-preferences";
        throw ConfigError("debias_stc: STC violated (" + failed +
                          " ); pass force to scale anyway");
    }

    DebiasReport rep;
    rep.raw = raw;
    rep.j_used = j_used;
    rep.forced = !stc.satisfied();
    rep.stc = stc;
    rep.debiased_coefficients = linalg::scale(raw.coefficients, j_used);
    rep.debiased_se = linalg::scale(raw.standard_errors, j_used);

    rep.ci_inflation_vs_matched = std::numeric_limits<double>::quiet_NaN();
    if (matched) {
        double min_ratio = std::numeric_limits<double>::infinity();
        for (std::size_t i = 1; i < rep.debiased_se.size(); ++i) {
            if (i < matched->standard_errors.size() && matched->standard_errors[i] > 0.0) {
                min_ratio = std::min(min_ratio,
                                     rep.debiased_se[i] / matched->standard_errors[i]);
            }
        }
        if (std::isfinite(min_ratio)) rep.ci_inflation_vs_matched = min_ratio;
    }
    return rep;
}

MixedSweepResult sweep_mixed(const datagen::Population& pop,
                             const fragmentation::AssignmentMatrix& a,
                             std::span<const double> r_grid) {
    if (pop.config.device_specific()) {
        throw ConfigError("sweep_mixed: needs a common-effect population (mixed pooling is common-form)");
    }
    const std::size_t k = pop.n_covariates();
    linalg::Vector truth(1 + k);
    truth[0] = pop.config.beta0;
    for (std::size_t c = 0; c < k; ++c) truth[1 + c] = pop.config.beta1[c];

    // r = 1 is the flag baseline.
    estimators::MixedEstimateReport full = estimators::estimate_mixed(pop, a, 1.0);
    linalg::Vector abs_bias_full(1 + k);
    for (std::size_t t = 0; t < 1 + k; ++t) {
        abs_bias_full[t] = std::abs(full.beta_mixed[t] - truth[t]);
    }

    MixedSweepResult out;
    for (double r : r_grid) {
        estimators::MixedEstimateReport rep =
            (r == 1.0) ? full : estimators::estimate_mixed(pop, a, r);
        out.r_grid.push_back(r);
        out.identity_gap.push_back(rep.identity_gap);
        const bool interior = r > 0.0 && r < 1.0;
        for (std::size_t t = 0; t < 1 + k; ++t) {
            MixedSweepResult::Row row;
            row.r = r;
            row.term = rep.pooled.terms[t];
            row.bias = rep.beta_mixed[t] - truth[t];
            row.abs_bias = std::abs(row.bias);
            row.flag_nonmonotone = interior && row.abs_bias > abs_bias_full[t];
            if (row.flag_nonmonotone && t >= 1) out.any_interior_exceeds_full = true;
            out.rows.push_back(std::move(row));
        }
    }
    return out;
}

}  // namespace fraglab::correctives
