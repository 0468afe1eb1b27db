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

#include "fraglab/datagen.hpp"
#include "fraglab/linalg.hpp"

// Fragmentation mechanics: each user's outcome lands on exactly one device
// (a categorical draw from the user's preference vector), exposures split
// natively per device, and the naive analyst sees J*n device-labeled rows
// with no user linkage.

namespace fraglab::fragmentation {

struct AssignmentMatrix {
    std::vector<int> device;  // per user, 0-based device index
    std::size_t n_devices = 0;

    double one_hot(std::size_t user, std::size_t j) const {
        return device[user] == static_cast<int>(j) ? 1.0 : 0.0;
    }
};

// View of the observable fragment columns. Naive estimator paths take this
// type, which carries no user linkage; only oracle and diagnostic code reads
// FragmentedDataset::oracle_user directly.
struct FragmentView {
    std::size_t n_devices = 0;
    std::size_t n_covariates = 0;
    const std::vector<int>* device = nullptr;
    const linalg::Vector* y = nullptr;
    const linalg::Matrix* x = nullptr;  // n_fragments x k

    std::size_t n_fragments() const { return y->size(); }
};

struct FragmentedDataset {
    std::size_t n_devices = 0;
    std::size_t n_covariates = 0;
    std::vector<std::int64_t> fragment_id;
    std::vector<int> device;  // 0-based
    linalg::Vector y;
    linalg::Matrix x;  // n_fragments x k
    std::vector<std::string> strata_names;
    std::vector<std::vector<int>> strata;  // per variable, per fragment
    // Oracle-only linkage; empty when the linkage is genuinely unknown.
    std::vector<std::int64_t> oracle_user;

    std::size_t n_fragments() const { return y.size(); }
    bool has_oracle() const { return !oracle_user.empty(); }
    FragmentView view() const { return {n_devices, n_covariates, &device, &y, &x}; }
};

enum class ModelForm {
    common_stacked,
    device_specific_stacked,
    device_split,
    true_common,
    true_device_specific,
    aggregated_common,
    aggregated_device_specific,
    mixed_pooled,
};

std::string model_form_name(ModelForm form);

// Stacked design plus the bookkeeping needed to audit the reconstruction
// identity W * Xtilde * Omega = [eta, sum_j X_j]. W is positional: fragments
// are stored user-major (J consecutive rows per source unit), so W sums each
// consecutive block of J rows and Omega rescales the replicated intercept.
struct DesignMatrices {
    ModelForm form = ModelForm::common_stacked;
    linalg::Vector y;
    linalg::Matrix x;  // leading intercept column
    std::vector<std::string> terms;
    std::size_t group_size = 1;  // J for stacked forms, 1 otherwise

    linalg::Vector omega_diagonal() const;
    // W * X * Omega, rows = fragment groups. Only meaningful for stacked forms.
    linalg::Matrix reconstructed_total() const;
};

// Draws the per-user device assignment from the population's realized
// preference vectors. The stream is disjoint from the noise stream, which is
// what enforces s independent of eps given exposures. Pass seed_override for
// Monte Carlo redraws.
AssignmentMatrix draw_assignment(const datagen::Population& pop,
                                 std::optional<std::uint64_t> seed_override = std::nullopt);

// Splits each user's row into J device fragments, user-major order. The
// outcome rides on the assigned device; all other fragments keep y = 0 but
// remain rows (the naive analyst sees every cookie as an observation).
FragmentedDataset fragment(const datagen::Population& pop, const AssignmentMatrix& a);

// [eta, x-tilde] stack treating every fragment as an observation.
DesignMatrices stack_common(const FragmentView& f);
// Block layout [eta | X1 0 ... | 0 X2 ... ] with device-specific slopes.
DesignMatrices stack_device_specific(const FragmentView& f);
// One [eta, X_j] design per device, responses = that device's fragments.
std::vector<DesignMatrices> split_by_device(const FragmentView& f);

inline DesignMatrices stack_common(const FragmentedDataset& f) { return stack_common(f.view()); }
inline DesignMatrices stack_device_specific(const FragmentedDataset& f) {
    return stack_device_specific(f.view());
}
inline std::vector<DesignMatrices> split_by_device(const FragmentedDataset& f) {
    return split_by_device(f.view());
}

// True-data designs from the unfragmented population.
DesignMatrices design_true_common(const datagen::Population& pop);
DesignMatrices design_true_device_specific(const datagen::Population& pop);

}  // namespace fraglab::fragmentation
