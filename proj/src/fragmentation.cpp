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

#include "fraglab/fragmentation.hpp"

#include <span>

#include "fraglab/errors.hpp"
#include "fraglab/rng.hpp"

namespace fraglab::fragmentation {

std::string model_form_name(ModelForm form) {
    switch (form) {
        case ModelForm::common_stacked: return "common-stacked";
        case ModelForm::device_specific_stacked: return "device-specific-stacked";
        case ModelForm::device_split: return "device-split";
        case ModelForm::true_common: return "true-common";
        case ModelForm::true_device_specific: return "true-device-specific";
        case ModelForm::aggregated_common: return "aggregated-common";
        case ModelForm::aggregated_device_specific: return "aggregated-device-specific";
        case ModelForm::mixed_pooled: return "mixed-pooled";
    }
    return "unknown";
}

linalg::Vector DesignMatrices::omega_diagonal() const {
    linalg::Vector d(x.cols(), 1.0);
    if (form == ModelForm::common_stacked || form == ModelForm::device_specific_stacked) {
        d[0] = 1.0 / static_cast<double>(group_size);
    }
    return d;
}

linalg::Matrix DesignMatrices::reconstructed_total() const {
    if (x.rows() % group_size != 0) {
        throw ConfigError("design rows are not a whole number of fragment groups");
    }
    const std::size_t groups = x.rows() / group_size;
    linalg::Vector omega = omega_diagonal();
    linalg::Matrix out(groups, x.cols());
    for (std::size_t c = 0; c < x.cols(); ++c) {
        const double* src = x.col(c);
        double* dst = out.col(c);
        for (std::size_t g = 0; g < groups; ++g) {
            double s = 0.0;
            for (std::size_t r = 0; r < group_size; ++r) s += src[g * group_size + r];
            dst[g] = s * omega[c];
        }
    }
    return out;
}

AssignmentMatrix draw_assignment(const datagen::Population& pop,
                                 std::optional<std::uint64_t> seed_override) {
    if (pop.lambda.rows() != pop.n_users()) {
        throw ConfigError("population carries no realized preference probabilities");
    }
    rng::Engine eng(seed_override.value_or(pop.config.seed), rng::stream::assignment);
    AssignmentMatrix a;
    a.n_devices = pop.n_devices();
    a.device.resize(pop.n_users());
    std::vector<double> row(a.n_devices);
    for (std::size_t i = 0; i < pop.n_users(); ++i) {
        for (std::size_t j = 0; j < a.n_devices; ++j) row[j] = pop.lambda(i, j);
        a.device[i] = static_cast<int>(eng.next_categorical(row));
    }
    return a;
}

FragmentedDataset fragment(const datagen::Population& pop, const AssignmentMatrix& a) {
    if (a.device.size() != pop.n_users() || a.n_devices != pop.n_devices()) {
        throw ConfigError("assignment does not match population dimensions");
    }
    const std::size_t n = pop.n_users();
    const std::size_t j_devices = pop.n_devices();
    const std::size_t k = pop.n_covariates();

    FragmentedDataset f;
    f.n_devices = j_devices;
    f.n_covariates = k;
    const std::size_t rows = n * j_devices;
    f.fragment_id.resize(rows);
    f.device.resize(rows);
    f.y.assign(rows, 0.0);
    f.x = linalg::Matrix(rows, k);
    f.oracle_user.resize(rows);
    f.strata_names = pop.strata_names;
    f.strata.assign(pop.strata.size(), std::vector<int>(rows));

    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < j_devices; ++j) {
            const std::size_t r = i * j_devices + j;
            f.fragment_id[r] = static_cast<std::int64_t>(r) + 1;
            f.device[r] = static_cast<int>(j);
            f.y[r] = (a.device[i] == static_cast<int>(j)) ? pop.outcomes[i] : 0.0;
            for (std::size_t c = 0; c < k; ++c) f.x(r, c) = pop.exposures[j](i, c);
            f.oracle_user[r] = static_cast<std::int64_t>(i);
            for (std::size_t v = 0; v < pop.strata.size(); ++v) {
                f.strata[v][r] = pop.strata[v][i];
            }
        }
    }
    return f;
}

DesignMatrices stack_common(const FragmentView& f) {
    const std::size_t rows = f.n_fragments();
    const std::size_t k = f.n_covariates;
    DesignMatrices d;
    d.form = ModelForm::common_stacked;
    d.group_size = f.n_devices;
    d.y = *f.y;
    d.x = linalg::Matrix(rows, 1 + k, 0.0);
    for (std::size_t r = 0; r < rows; ++r) d.x(r, 0) = 1.0;
    for (std::size_t c = 0; c < k; ++c) {
        d.x.set_col(1 + c, f.x->col_span(c));
    }
    d.terms.push_back("intercept");
    for (std::size_t c = 0; c < k; ++c) d.terms.push_back("x" + std::to_string(c + 1));
    return d;
}

DesignMatrices stack_device_specific(const FragmentView& f) {
    if (f.n_devices < 2) {
        throw ConfigError("device-specific stacking needs J >= 2 devices");
    }
    const std::size_t rows = f.n_fragments();
    const std::size_t k = f.n_covariates;
    const std::size_t j_devices = f.n_devices;
    DesignMatrices d;
    d.form = ModelForm::device_specific_stacked;
    d.group_size = j_devices;
    d.y = *f.y;
    d.x = linalg::Matrix(rows, 1 + j_devices * k, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        d.x(r, 0) = 1.0;
        const std::size_t j = static_cast<std::size_t>((*f.device)[r]);
        for (std::size_t c = 0; c < k; ++c) {
            d.x(r, 1 + j * k + c) = (*f.x)(r, c);
        }
    }
    d.terms.push_back("intercept");
    for (std::size_t j = 0; j < j_devices; ++j) {
        for (std::size_t c = 0; c < k; ++c) {
            d.terms.push_back("x" + std::to_string(c + 1) + "_d" + std::to_string(j + 1));
        }
    }
    return d;
}

std::vector<DesignMatrices> split_by_device(const FragmentView& f) {
    const std::size_t k = f.n_covariates;
    std::vector<DesignMatrices> out(f.n_devices);
    std::vector<std::size_t> counts(f.n_devices, 0);
    for (int dev : *f.device) ++counts[static_cast<std::size_t>(dev)];

    for (std::size_t j = 0; j < f.n_devices; ++j) {
        out[j].form = ModelForm::device_split;
        out[j].group_size = 1;
        out[j].y.reserve(counts[j]);
        out[j].x = linalg::Matrix(counts[j], 1 + k, 0.0);
        out[j].terms.push_back("intercept");
        for (std::size_t c = 0; c < k; ++c) {
            out[j].terms.push_back("x" + std::to_string(c + 1) + "_d" + std::to_string(j + 1));
        }
    }

    std::vector<std::size_t> fill(f.n_devices, 0);
    for (std::size_t r = 0; r < f.n_fragments(); ++r) {
        const std::size_t j = static_cast<std::size_t>((*f.device)[r]);
        const std::size_t row = fill[j]++;
        out[j].y.push_back((*f.y)[r]);
        out[j].x(row, 0) = 1.0;
        for (std::size_t c = 0; c < k; ++c) out[j].x(row, 1 + c) = (*f.x)(r, c);
    }
    return out;
}

DesignMatrices design_true_common(const datagen::Population& pop) {
    const std::size_t n = pop.n_users();
    const std::size_t k = pop.n_covariates();
    DesignMatrices d;
    d.form = ModelForm::true_common;
    d.group_size = 1;
    d.y = pop.outcomes;
    d.x = linalg::Matrix(n, 1 + k, 0.0);
    linalg::Matrix total = pop.total_exposure();
    for (std::size_t r = 0; r < n; ++r) d.x(r, 0) = 1.0;
    for (std::size_t c = 0; c < k; ++c) d.x.set_col(1 + c, total.col_span(c));
    d.terms.push_back("intercept");
    for (std::size_t c = 0; c < k; ++c) d.terms.push_back("x" + std::to_string(c + 1));
    return d;
}

DesignMatrices design_true_device_specific(const datagen::Population& pop) {
    const std::size_t n = pop.n_users();
    const std::size_t k = pop.n_covariates();
    const std::size_t j_devices = pop.n_devices();
    DesignMatrices d;
    d.form = ModelForm::true_device_specific;
    d.group_size = 1;
    d.y = pop.outcomes;
    d.x = linalg::Matrix(n, 1 + j_devices * k, 0.0);
    for (std::size_t r = 0; r < n; ++r) d.x(r, 0) = 1.0;
    for (std::size_t j = 0; j < j_devices; ++j) {
        for (std::size_t c = 0; c < k; ++c) {
            d.x.set_col(1 + j * k + c, pop.exposures[j].col_span(c));
        }
    }
    d.terms.push_back("intercept");
    for (std::size_t j = 0; j < j_devices; ++j) {
        for (std::size_t c = 0; c < k; ++c) {
            d.terms.push_back("x" + std::to_string(c + 1) + "_d" + std::to_string(j + 1));
        }
    }
    return d;
}

}  // namespace fraglab::fragmentation
