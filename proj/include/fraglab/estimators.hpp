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
#include "fraglab/fragmentation.hpp"
#include "fraglab/linalg.hpp"

namespace fraglab::estimators {

using fragmentation::DesignMatrices;
using fragmentation::FragmentView;
using fragmentation::ModelForm;

struct EstimateReport {
    ModelForm form = ModelForm::true_common;
    std::vector<std::string> terms;
    linalg::Vector coefficients;
    linalg::Vector standard_errors;
    std::vector<std::pair<double, double>> ci95;  // normal 1.96 approximation
    std::size_t n_rows = 0;
    std::size_t n_params = 0;
    double condition_number = 1.0;
    double rss = 0.0;
    double sigma2_hat = 0.0;
};

// Plain homoskedastic OLS via Householder QR. Throws SingularDesignError on
// rank deficiency (smallest singular value under 1e-10 of the largest) and
// ConfigError when there are no residual degrees of freedom.
EstimateReport ols(const DesignMatrices& design);

// OLS on the unfragmented data: y on [eta, sum_j X_j] or [eta, X_1..X_J].
EstimateReport estimate_true(const datagen::Population& pop, ModelForm form);

// Naive estimators on fragment rows, routed through the matching stack.
EstimateReport estimate_fragmented(const FragmentView& f, ModelForm form);
std::vector<EstimateReport> estimate_fragmented_split(const FragmentView& f);

// Pooled fit over a partially linked sample: a seed-deterministic share r of
// users contribute their J fragment rows, the rest contribute one matched
// row. beta_mixed satisfies the Durbin-Theil identity
//   beta_mixed = omega * beta_fragmented + (I - omega) * beta_linked,
// with omega = (Gf + Gl)^{-1} Gf built from the exact sub-design Grams.
struct MixedEstimateReport {
    EstimateReport pooled;
    linalg::Vector beta_mixed;
    linalg::Vector beta_fragmented_only;
    linalg::Vector beta_linked_only;
    linalg::Matrix omega;
    double r = 0.0;
    std::size_t n_fragmented_users = 0;
    // max-abs gap between beta_mixed and the omega-weighted combination
    double identity_gap = 0.0;
    // set when r > 0 rounded down to an empty fragmented subset
    std::string rounding_note;
};

MixedEstimateReport estimate_mixed(const datagen::Population& pop,
                                   const fragmentation::AssignmentMatrix& a, double r,
                                   std::optional<std::uint64_t> selection_seed = std::nullopt);

}  // namespace fraglab::estimators
