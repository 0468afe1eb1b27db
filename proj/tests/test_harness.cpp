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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "fraglab/errors.hpp"
#include "fraglab/harness.hpp"
#include "fraglab/io.hpp"

using namespace fraglab;
using namespace fraglab::harness;

namespace {

std::filesystem::path temp_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "fraglab_harness_tests" / name;
    std::filesystem::create_directories(dir);
    return dir;
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

MonteCarloConfig small_mc(std::uint64_t seed) {
    MonteCarloConfig mc;
    mc.dgp.n_users = 200;
    mc.dgp.n_devices = 2;
    mc.dgp.n_covariates = 1;
    mc.dgp.beta0 = 1.0;
    mc.dgp.beta1 = {0.5};
    mc.dgp.noise_sigma = 0.4;
    mc.dgp.seed = seed;
    mc.dgp.exposure.family = datagen::ExposureFamily::poisson;
    mc.dgp.exposure.mean = {{3.0}, {1.5}};
    mc.dgp.preference.kind = datagen::PreferenceKind::constant;
    mc.dgp.preference.lambda = {0.6, 0.4};
    mc.reps = 800;
    return mc;
}

int run_cli(std::vector<std::string> args) {
    std::vector<char*> argv;
    args.insert(args.begin(), "fraglab");
    for (auto& a : args) argv.push_back(a.data());
    return cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST_CASE("null effect: MC slope mean sits within five mc-se of zero") {
    MonteCarloConfig mc = small_mc(71);
    mc.dgp.beta0 = 0.0;
    mc.dgp.beta1 = {0.0};
    MCReport report = run_monte_carlo(mc);
    REQUIRE(report.rows.size() == 2);
    const MCRow& slope = report.rows.back();
    CHECK(slope.analytic_expected == doctest::Approx(0.0).scale(1.0));
    CHECK(std::abs(slope.mc_mean) <= 5.0 * slope.mc_se);
    CHECK(report.all_pass);
}

TEST_CASE("common-effect fixture passes across forms") {
    MonteCarloConfig mc = small_mc(72);
    CHECK(run_monte_carlo(mc).all_pass);

    mc.form = fragmentation::ModelForm::device_split;
    MCReport split = run_monte_carlo(mc);
    CHECK(split.all_pass);
    REQUIRE(split.rows.size() == 2);  // one slope per device
    CHECK(split.rows[0].term == "x1_d1");
}

TEST_CASE("monte carlo reruns are bit-identical and threads do not change results") {
    MonteCarloConfig mc = small_mc(73);
    mc.reps = 300;
    MCReport a = run_monte_carlo(mc);
    MCReport b = run_monte_carlo(mc);
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t t = 0; t < a.rows.size(); ++t) {
        CHECK(a.rows[t].mc_mean == b.rows[t].mc_mean);
        CHECK(a.rows[t].mc_se == b.rows[t].mc_se);
    }

    setenv("FRAGLAB_THREADS", "3", 1);
    CHECK(thread_cap() == 3);
    MCReport c = run_monte_carlo(mc);
    for (std::size_t t = 0; t < a.rows.size(); ++t) {
        CHECK(a.rows[t].mc_mean == c.rows[t].mc_mean);
    }
    setenv("FRAGLAB_THREADS", "1", 1);
}

TEST_CASE("mc csv excludes runtime and uses the documented header") {
    MonteCarloConfig mc = small_mc(74);
    mc.reps = 100;
    MCReport report = run_monte_carlo(mc);
    auto path = temp_dir("mc") / "mc.csv";
    write_mc_csv(path.string(), report);
    std::string text = read_text(path);
    CHECK(text.rfind("term,analytic_expected,mc_mean,mc_se,z_score,pass\n", 0) == 0);
    CHECK(text.find("runtime") == std::string::npos);
}

TEST_CASE("table1 scenario emits deterministic golden files") {
    auto dir1 = temp_dir("table1_a");
    auto dir2 = temp_dir("table1_b");
    run_scenario("table1", {dir1.string(), "csv", std::nullopt});
    run_scenario("table1", {dir2.string(), "csv", std::nullopt});

    std::string panel_b = read_text(dir1 / "table1_panel_b.csv");
    CHECK(panel_b.find("x1,0.39999999999999991") != std::string::npos);
    std::string panel_c = read_text(dir1 / "table1_panel_c.csv");
    CHECK(panel_c.find("-0.39999999999999991") != std::string::npos);

    // end-to-end determinism: byte-identical outputs on a rerun
    for (const char* name : {"table1_true.csv", "table1_panel_b.csv", "table1_panel_c.csv",
                             "table1_fragments_b.csv", "table1_fragments_c.csv"}) {
        CHECK(read_text(dir1 / name) == read_text(dir2 / name));
    }
}

TEST_CASE("unknown scenario names are rejected") {
    CHECK_THROWS_AS(run_scenario("not-a-scenario", {temp_dir("x").string(), "csv", std::nullopt}),
                    ConfigError);
    CHECK(scenario_names().size() == 7);
}

TEST_CASE("cli: missing config exits 1, bad subcommand exits 1") {
    CHECK(run_cli({"estimate", "--config", "/nonexistent/missing.json"}) == 1);
    CHECK(run_cli({"frobnicate"}) == 1);
    CHECK(run_cli({}) == 1);
}

TEST_CASE("cli: simulate then estimate round-trips through files") {
    auto dir = temp_dir("cli_flow");
    auto config_path = dir / "sim.json";
    {
        std::ofstream out(config_path);
        out << R"({
            "dgp": {
                "n_users": 150, "n_devices": 2, "n_covariates": 1,
                "beta0": 1.0, "beta1": [0.5], "noise_sigma": 0.0, "seed": 11,
                "exposure": {"family": "poisson", "mean": [[3.0], [1.5]]},
                "preference": {"kind": "constant", "lambda": [0.5, 0.5]}
            }
        })";
    }
    CHECK(run_cli({"simulate", "--config", config_path.string(), "--out", dir.string()}) == 0);
    CHECK(std::filesystem::exists(dir / "population.csv"));

    auto est_config = dir / "est.json";
    {
        std::ofstream out(est_config);
        out << R"({"population_csv": ")" << (dir / "population.csv").string()
            << R"(", "form": "true-common"})";
    }
    CHECK(run_cli({"estimate", "--config", est_config.string(), "--out", dir.string()}) == 0);
    std::string text = read_text(dir / "estimate_true.csv");
    // sigma = 0: the matched fit recovers the configured coefficients
    CHECK(text.find("x1,0.5") != std::string::npos);
}

TEST_CASE("cli: singular designs exit with code 2") {
    auto dir = temp_dir("cli_singular");
    auto config_path = dir / "singular.json";
    {
        std::ofstream out(config_path);
        // one user, constant exposures: no slope variation after stacking
        out << R"({
            "dgp": {
                "n_users": 4, "n_devices": 2, "n_covariates": 1,
                "beta0": 1.0, "beta1": [0.0], "noise_sigma": 0.0, "seed": 1,
                "exposure": {"family": "fixed-matrix",
                             "fixed": [[[1],[1],[1],[1]], [[1],[1],[1],[1]]]},
                "preference": {"kind": "constant", "lambda": [1.0, 0.0]}
            },
            "form": "common-stacked"
        })";
    }
    CHECK(run_cli({"estimate", "--config", config_path.string(), "--out", dir.string()}) == 2);
}

TEST_CASE("cli: scenario subcommand writes into --out") {
    auto dir = temp_dir("cli_scenario");
    CHECK(run_cli({"scenario", "table1", "--out", dir.string()}) == 0);
    CHECK(std::filesystem::exists(dir / "table1_panel_b.csv"));
}

TEST_CASE("cli: the full pipeline of subcommands runs end to end") {
    auto dir = temp_dir("cli_pipeline");
    auto write_config = [&](const std::string& name, const std::string& body) {
        auto path = dir / name;
        std::ofstream out(path);
        out << body;
        return path.string();
    };

    std::string dgp = R"("dgp": {
        "n_users": 400, "n_devices": 2, "n_covariates": 1,
        "beta0": 1.0, "beta1": [0.5], "noise_sigma": 0.3, "seed": 12,
        "exposure": {"family": "poisson", "mean": [[3.0], [3.0]]},
        "preference": {"kind": "constant", "lambda": [0.5, 0.5]}
    })";

    std::string frag_cfg = write_config(
        "frag.json",
        "{" + dgp + R"(, "strata": [{"name": "msa", "cardinality": 5}], "include_oracle": true})");
    CHECK(run_cli({"fragment", "--config", frag_cfg, "--out", dir.string()}) == 0);
    REQUIRE(std::filesystem::exists(dir / "fragments.csv"));

    std::string frag_path = (dir / "fragments.csv").string();
    std::string agg_cfg = write_config(
        "agg.json", R"({"fragments_csv": ")" + frag_path +
                        R"(", "vars": ["msa"], "form": "aggregated-common"})");
    CHECK(run_cli({"aggregate", "--config", agg_cfg, "--out", dir.string()}) == 0);
    CHECK(std::filesystem::exists(dir / "aggregated.csv"));
    CHECK(std::filesystem::exists(dir / "estimate_aggregated.csv"));

    std::string diag_cfg =
        write_config("diag.json", R"({"fragments_csv": ")" + frag_path + R"("})");
    CHECK(run_cli({"diagnose", "--config", diag_cfg, "--out", dir.string()}) == 0);
    CHECK(std::filesystem::exists(dir / "diagnose_correlation.json"));

    // The STC gates are sampling-noise-sized at n = 400, so the de-biasing
    // leg gets the larger symmetric fixture whose realized moments pass.
    std::string debias_cfg = write_config("debias.json", R"({"dgp": {
        "n_users": 10000, "n_devices": 2, "n_covariates": 1,
        "beta0": 1.0, "beta1": [0.5], "noise_sigma": 0.3, "seed": 1,
        "exposure": {"family": "poisson", "mean": [[3.0], [3.0]]},
        "preference": {"kind": "constant", "lambda": [0.5, 0.5]}
    }})");
    CHECK(run_cli({"debias", "--config", debias_cfg, "--out", dir.string()}) == 0);
    CHECK(std::filesystem::exists(dir / "debias.json"));

    std::string bias_cfg =
        write_config("bias.json", "{" + dgp + R"(, "form": "common-stacked"})");
    CHECK(run_cli({"bias", "--config", bias_cfg, "--out", dir.string()}) == 0);
    CHECK(std::filesystem::exists(dir / "bias.json"));

    // bias from fragments with a plug-in lambda
    std::string bias_frag_cfg = write_config(
        "bias_frag.json", R"({"fragments_csv": ")" + frag_path +
                              R"(", "form": "common-stacked", "beta0": 1.0, "beta1": [0.5]})");
    CHECK(run_cli({"bias", "--config", bias_frag_cfg, "--out", dir.string()}) == 0);

    std::string mc_cfg = write_config(
        "mc.json", "{" + dgp + R"(, "form": "common-stacked", "reps": 300})");
    CHECK(run_cli({"montecarlo", "--config", mc_cfg, "--out", dir.string()}) == 0);
    std::string mc_text = read_text(dir / "montecarlo.csv");
    CHECK(mc_text.find(",1\n") != std::string::npos);  // pass column

    std::string sweep_cfg = write_config(
        "sweep.json", "{" + dgp + R"(, "r_grid": [0.0, 0.5, 1.0]})");
    CHECK(run_cli({"sweep-mixed", "--config", sweep_cfg, "--out", dir.string()}) == 0);
    CHECK(std::filesystem::exists(dir / "sweep_mixed.csv"));

    // estimate with the json output format
    std::string est_cfg = write_config(
        "est_json.json",
        R"({"fragments_csv": ")" + frag_path + R"(", "form": "common-stacked"})");
    CHECK(run_cli({"estimate", "--config", est_cfg, "--out", dir.string(), "--format",
                   "json"}) == 0);
    CHECK(std::filesystem::exists(dir / "estimate.json"));
}
