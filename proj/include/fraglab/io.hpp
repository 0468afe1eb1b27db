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

#include <string>

#include <json.hpp>

#include "fraglab/biascalc.hpp"
#include "fraglab/correctives.hpp"
#include "fraglab/datagen.hpp"
#include "fraglab/estimators.hpp"
#include "fraglab/fragmentation.hpp"

// File formats:
//   user-level CSV:      user_id, y, x{c}_d{j} ..., s_<name> ...
//   fragment-level CSV:  fragment_id, device, y, x1..xk, s_<name> ..., [true_user_id]
//   estimate CSV:        term, estimate, se, ci_lo, ci_hi
// Doubles are printed with %.17g so that reading a file back reproduces the
// exact values and repeated runs produce byte-identical output.

namespace fraglab::io {

using json = nlohmann::ordered_json;

std::string format_double(double v);

// --- population -------------------------------------------------------------
void write_population_csv(const std::string& path, const datagen::Population& pop);
// Preference model comes back as "external"; noise and lambda are unknown.
datagen::Population load_population_csv(const std::string& path);

// --- fragments --------------------------------------------------------------
void write_fragments_csv(const std::string& path, const fragmentation::FragmentedDataset& f,
                         bool include_oracle);
fragmentation::FragmentedDataset load_fragments_csv(const std::string& path);

// --- reports ----------------------------------------------------------------
void write_estimate_csv(const std::string& path, const estimators::EstimateReport& rep);
void write_aggregated_csv(const std::string& path, const correctives::AggregatedDataset& agg);
void write_sweep_csv(const std::string& path, const correctives::MixedSweepResult& sweep);

json to_json(const estimators::EstimateReport& rep);
json to_json(const biascalc::BiasDecomposition& bias);
json to_json(const biascalc::SplitBias& bias);
json to_json(const biascalc::STCReport& rep);
json to_json(const biascalc::CorrelationDiagnostic& diag);
json to_json(const correctives::DebiasReport& rep);
json to_json(const estimators::MixedEstimateReport& rep);
void write_json(const std::string& path, const json& doc);

// --- configuration ----------------------------------------------------------
datagen::DGPConfig dgp_config_from_json(const nlohmann::json& j);
datagen::StrataSpec strata_spec_from_json(const nlohmann::json& j);
fragmentation::ModelForm model_form_from_string(const std::string& name);
nlohmann::json load_json_file(const std::string& path);

}  // namespace fraglab::io
