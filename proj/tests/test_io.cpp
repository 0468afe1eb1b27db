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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fraglab/errors.hpp"
#include "fraglab/io.hpp"

using namespace fraglab;
using namespace fraglab::datagen;

namespace {

std::filesystem::path temp_file(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "fraglab_io_tests";
    std::filesystem::create_directories(dir);
    return dir / name;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

DGPConfig sample_config() {
    DGPConfig cfg;
    cfg.n_users = 120;
    cfg.n_devices = 2;
    cfg.n_covariates = 3;
    cfg.beta0 = 1.0;
    cfg.beta1 = {0.5, -0.2, 0.1};
    cfg.noise_sigma = 0.4;
    cfg.seed = 5;
    cfg.exposure.family = ExposureFamily::poisson;
    cfg.exposure.mean = {{3.0, 1.0, 2.0}, {2.0, 2.0, 1.0}};
    cfg.preference.kind = PreferenceKind::constant;
    cfg.preference.lambda = {0.5, 0.5};
    return cfg;
}

}  // namespace

TEST_CASE("population CSV round-trip preserves every value") {
    StrataSpec spec;
    spec.variables.push_back({"msa", 8, false});
    Population pop = attach_strata(generate_population(sample_config()), spec);
    auto path = temp_file("pop_roundtrip.csv");
    io::write_population_csv(path.string(), pop);

    Population loaded = io::load_population_csv(path.string());
    REQUIRE(loaded.n_users() == pop.n_users());
    REQUIRE(loaded.n_devices() == 2);
    REQUIRE(loaded.n_covariates() == 3);
    CHECK(loaded.preference.kind == PreferenceKind::external);
    for (std::size_t i = 0; i < pop.n_users(); ++i) {
        CHECK(loaded.outcomes[i] == pop.outcomes[i]);
        for (std::size_t j = 0; j < 2; ++j) {
            for (std::size_t c = 0; c < 3; ++c) {
                CHECK(loaded.exposures[j](i, c) == pop.exposures[j](i, c));
            }
        }
        CHECK(loaded.strata[0][i] == pop.strata[0][i]);
    }
}

TEST_CASE("repeated writes are byte-identical") {
    Population pop = generate_population(sample_config());
    auto p1 = temp_file("det_a.csv");
    auto p2 = temp_file("det_b.csv");
    io::write_population_csv(p1.string(), pop);
    io::write_population_csv(p2.string(), pop);
    CHECK(read_text(p1) == read_text(p2));
}

TEST_CASE("small literal population file parses into the worked example") {
    auto path = temp_file("table1a.csv");
    write_text(path,
               "user_id,y,x1_d1,x1_d2\n"
               "1,1,2,0\n"
               "2,1,3,1\n");
    Population pop = io::load_population_csv(path.string());
    CHECK(pop.n_users() == 2);
    CHECK(pop.n_devices() == 2);
    CHECK(pop.outcomes[0] == 1.0);
    CHECK(pop.exposures[0](1, 0) == 3.0);
    CHECK(pop.exposures[1](1, 0) == 1.0);
}

TEST_CASE("population parse errors carry row context") {
    auto empty = temp_file("empty.csv");
    write_text(empty, "user_id,y,x1_d1,x1_d2\n");
    CHECK_THROWS_AS(io::load_population_csv(empty.string()), ParseError);

    auto missing = temp_file("missing_col.csv");
    write_text(missing, "user_id,y,x1_d1\n1,1,2\n");  // J grid incomplete
    CHECK_THROWS_AS(io::load_population_csv(missing.string()), ParseError);

    auto bad_cell = temp_file("bad_cell.csv");
    write_text(bad_cell,
               "user_id,y,x1_d1,x1_d2\n"
               "1,1,2,0\n"
               "2,oops,3,1\n");
    try {
        io::load_population_csv(bad_cell.string());
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.row() == 3);
        CHECK(std::string(e.what()).find("oops") != std::string::npos);
    }

    auto ragged = temp_file("ragged.csv");
    write_text(ragged,
               "user_id,y,x1_d1,x1_d2\n"
               "1,1,2\n");
    CHECK_THROWS_AS(io::load_population_csv(ragged.string()), ParseError);

    auto unknown = temp_file("unknown_col.csv");
    write_text(unknown, "user_id,y,x1_d1,x1_d2,mystery\n1,1,2,0,9\n");
    CHECK_THROWS_AS(io::load_population_csv(unknown.string()), ParseError);
}

TEST_CASE("fragment CSV round-trip with strata and oracle") {
    StrataSpec spec;
    spec.variables.push_back({"msa", 8, false});
    Population pop = attach_strata(generate_population(sample_config()), spec);
    fragmentation::FragmentedDataset f =
        fragmentation::fragment(pop, fragmentation::draw_assignment(pop));
    auto path = temp_file("frag_roundtrip.csv");
    io::write_fragments_csv(path.string(), f, true);

    fragmentation::FragmentedDataset loaded = io::load_fragments_csv(path.string());
    REQUIRE(loaded.n_fragments() == f.n_fragments());
    CHECK(loaded.n_devices == 2);
    CHECK(loaded.has_oracle());
    for (std::size_t r = 0; r < f.n_fragments(); ++r) {
        CHECK(loaded.device[r] == f.device[r]);
        CHECK(loaded.y[r] == f.y[r]);
        for (std::size_t c = 0; c < 3; ++c) CHECK(loaded.x(r, c) == f.x(r, c));
        CHECK(loaded.oracle_user[r] == f.oracle_user[r]);
        CHECK(loaded.strata[0][r] == f.strata[0][r]);
    }

    // Writing without the oracle column hides the linkage.
    auto blind_path = temp_file("frag_blind.csv");
    io::write_fragments_csv(blind_path.string(), f, false);
    fragmentation::FragmentedDataset blind = io::load_fragments_csv(blind_path.string());
    CHECK(!blind.has_oracle());
}

TEST_CASE("estimate CSV uses the documented header") {
    estimators::EstimateReport rep;
    rep.terms = {"intercept", "x1"};
    rep.coefficients = {0.5, 1.25};
    rep.standard_errors = {0.1, 0.2};
    rep.ci95 = {{0.304, 0.696}, {0.858, 1.642}};
    auto path = temp_file("estimate.csv");
    io::write_estimate_csv(path.string(), rep);
    std::string text = read_text(path);
    CHECK(text.rfind("term,estimate,se,ci_lo,ci_hi\n", 0) == 0);
    CHECK(text.find("x1,1.25,") != std::string::npos);
}

TEST_CASE("report JSON carries the documented fields") {
    biascalc::BiasDecomposition bias;
    bias.vartheta = linalg::Matrix(1, 1, 0.2);
    bias.delta1 = {-1.0};
    bias.delta2 = {0.5};
    bias.delta3 = {0.1};
    bias.total_bias = {-0.08};
    bias.form = fragmentation::ModelForm::common_stacked;
    bias.lambda_source = "plug-in";
    io::json doc = io::to_json(bias);
    CHECK(doc["vartheta"][0][0] == 0.2);
    CHECK(doc["delta1"][0] == -1.0);
    CHECK(doc["total"][0] == -0.08);
    CHECK(doc["model_form"] == "common-stacked");
    CHECK(doc["lambda_source"] == "plug-in");
}

TEST_CASE("dgp config parses from JSON and validates") {
    nlohmann::json j = nlohmann::json::parse(R"({
        "n_users": 100, "n_devices": 2, "n_covariates": 1,
        "beta0": 1.0, "beta1": [0.5], "noise_sigma": 0.1, "seed": 9,
        "exposure": {"family": "poisson", "mean": [[3.0], [1.0]], "rho": 0.25},
        "preference": {"kind": "logistic-gap", "gamma0": 0.1, "gamma1": [0.4]}
    })");
    DGPConfig cfg = io::dgp_config_from_json(j);
    CHECK(cfg.n_users == 100);
    CHECK(cfg.exposure.rho == 0.25);
    CHECK(cfg.preference.kind == PreferenceKind::logistic_gap);
    CHECK_NOTHROW(cfg.validate());

    nlohmann::json bad = j;
    bad["exposure"]["family"] = "cauchy";
    CHECK_THROWS_AS(io::dgp_config_from_json(bad), ConfigError);

    nlohmann::json scalar_beta = j;
    scalar_beta["beta1"] = 0.5;  // scalar shorthand
    CHECK(io::dgp_config_from_json(scalar_beta).beta1.size() == 1);
}

TEST_CASE("model form names round-trip") {
    using fragmentation::ModelForm;
    for (ModelForm form : {ModelForm::common_stacked, ModelForm::device_specific_stacked,
                           ModelForm::device_split, ModelForm::true_common,
                           ModelForm::true_device_specific, ModelForm::aggregated_common,
                           ModelForm::aggregated_device_specific}) {
        CHECK(io::model_form_from_string(fragmentation::model_form_name(form)) == form);
    }
    CHECK_THROWS_AS(io::model_form_from_string("bogus"), ConfigError);
}

TEST_CASE("aggregated and sweep CSV writers use the documented schemas") {
    correctives::AggregatedDataset agg;
    agg.binning_vars = {"msa"};
    agg.n_devices = 2;
    agg.n_covariates = 1;
    correctives::AggregatedDataset::Bin bin;
    bin.key = {3};
    bin.y_sum = 4.5;
    bin.x_sum_device = {2.0, 1.0};
    bin.n_fragments = 4;
    agg.bins.push_back(bin);
    auto agg_path = temp_file("agg.csv");
    io::write_aggregated_csv(agg_path.string(), agg);
    std::string text = read_text(agg_path);
    CHECK(text.rfind("s_msa,n_fragments,y_sum,xsum1_d1,xsum1_d2\n", 0) == 0);
    CHECK(text.find("3,4,4.5,2,1") != std::string::npos);

    correctives::MixedSweepResult sweep;
    sweep.rows.push_back({0.5, "x1", -0.25, 0.25, true});
    auto sweep_path = temp_file("sweep.csv");
    io::write_sweep_csv(sweep_path.string(), sweep);
    text = read_text(sweep_path);
    CHECK(text.rfind("r,term,bias,abs_bias,flag_nonmonotone\n", 0) == 0);
    CHECK(text.find("0.5,x1,-0.25,0.25,1") != std::string::npos);
}
