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
#include <span>
#include <string>
#include <vector>

#include "fraglab/biascalc.hpp"
#include "fraglab/estimators.hpp"
#include "fraglab/fragmentation.hpp"

// The corrective toolset: stratified aggregation (un-fragmenting by binning),
// the symmetric-randomization de-biasing J * b-hat, and the mixed-estimator
// sweep that exposes the partial-linking pathology.

namespace fraglab::correctives {

struct AggregatedDataset {
    struct Bin {
        std::vector<int> key;          // strata values, same order as binning_vars
        double y_sum = 0.0;
        linalg::Vector x_sum_device;   // J*k, device-major blocks
        std::int64_t n_fragments = 0;
        std::int64_t n_users_oracle = -1;  // -1 when linkage is unknown
    };

    std::vector<std::string> binning_vars;
    std::vector<Bin> bins;  // sorted by key
    std::size_t n_devices = 0;
    std::size_t n_covariates = 0;
    std::size_t dropped_bins = 0;
    std::int64_t dropped_fragments = 0;

    linalg::Vector common_x_sum(const Bin& bin) const;  // k totals across devices
};

// Group-by on the strata tuple, summing outcomes and exposures within each
// bin. Bins with fewer than min_bin_rows fragments are dropped and counted,
// never silently discarded.
AggregatedDataset aggregate_strata(const fragmentation::FragmentedDataset& f,
                                   const std::vector<std::string>& vars,
                                   std::int64_t min_bin_rows = 1);

// OLS at the bin level. By default the intercept regressor is the bin's user
// count (n_fragments / J): summing the individual-level model over a bin
// multiplies the intercept by the number of members, so this preserves the
// individual-level reading of the slopes. plain_intercept switches to an
// ordinary column of ones for comparison.
estimators::EstimateReport estimate_aggregated(const AggregatedDataset& agg,
                                               fragmentation::ModelForm form,
                                               bool plain_intercept = false);

struct DebiasReport {
    estimators::EstimateReport raw;
    double j_used = 0.0;
    linalg::Vector debiased_coefficients;  // J * raw (intercept included, undoing Omega)
    linalg::Vector debiased_se;
    // min over slope terms of debiased SE / matched SE; NaN with no baseline
    double ci_inflation_vs_matched = 0.0;
    bool forced = false;
    biascalc::STCReport stc;
};

// Multiplies the fragmented estimate by the (possibly average) fragment count
// J. Refuses when the STC verdict is violated unless force is set; the STC
// evidence rides along in the report either way.
DebiasReport debias_stc(const estimators::EstimateReport& raw, double j_used,
                        const biascalc::STCReport& stc, bool force = false,
                        std::optional<estimators::EstimateReport> matched = std::nullopt);

struct MixedSweepResult {
    struct Row {
        double r = 0.0;
        std::string term;
        double bias = 0.0;
        double abs_bias = 0.0;
        bool flag_nonmonotone = false;  // interior r with |bias| > |bias at r=1|
    };
    std::vector<Row> rows;
    std::vector<double> r_grid;
    std::vector<double> identity_gap;  // Durbin-Theil gap per grid point
    bool any_interior_exceeds_full = false;  // over slope terms
};

// Runs estimate_mixed across the grid and reports the per-term bias against
// the configured truth. r = 1 is always evaluated as the flag baseline.
MixedSweepResult sweep_mixed(const datagen::Population& pop,
                             const fragmentation::AssignmentMatrix& a,
                             std::span<const double> r_grid);

}  // namespace fraglab::correctives
