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

#include "fraglab/biascalc.hpp"
#include "fraglab/datagen.hpp"
#include "fraglab/estimators.hpp"

// Experiment driver: the Monte Carlo verifier (estimator means against the
// closed-form conditional expectations), the built-in scenario library, and
// the command-line entry point.

namespace fraglab::harness {

struct MonteCarloConfig {
    datagen::DGPConfig dgp;
    fragmentation::ModelForm form = fragmentation::ModelForm::common_stacked;
    std::size_t reps = 1000;
    double z_threshold = 5.0;
    // Master seed for the per-replication substreams; defaults to dgp.seed.
    std::optional<std::uint64_t> mc_seed;
};

struct MCRow {
    std::string term;
    double analytic_expected = 0.0;
    double mc_mean = 0.0;
    double mc_se = 0.0;
    double z = 0.0;
    bool pass = false;
};

struct MCReport {
    std::string form_name;
    std::size_t reps = 0;
    std::vector<MCRow> rows;
    bool all_pass = false;
    double runtime_seconds = 0.0;  // console-only; not serialized
};

// Holds exposures fixed, redraws (assignment, noise) per replication on
// dedicated substreams, fits the requested estimator, and compares the mean
// coefficient vector to the analytic conditional expectation at z_threshold
// times the Monte Carlo standard error. Replications run in parallel
// (capped by FRAGLAB_THREADS) into indexed slots, so the reduction order is
// fixed regardless of scheduling.
MCReport run_monte_carlo(const MonteCarloConfig& cfg);

// Serialization of the MC table (term, analytic_expected, mc_mean, mc_se,
// z_score, pass); runtime stays out of the file so outputs are reproducible.
void write_mc_csv(const std::string& path, const MCReport& report);

struct ScenarioOptions {
    std::string out_dir = ".";
    std::string format = "csv";  // csv | json
    std::optional<std::uint64_t> seed;
};

const std::vector<std::string>& scenario_names();
// Runs a built-in scenario, writing <name>_<report>.{csv,json} under out_dir.
void run_scenario(const std::string& name, const ScenarioOptions& options);

// Worker-thread cap: FRAGLAB_THREADS, else hardware concurrency.
unsigned thread_cap();

int cli(int argc, char** argv);

}  // namespace fraglab::harness
