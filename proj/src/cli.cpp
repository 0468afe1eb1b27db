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

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "fraglab/correctives.hpp"
#include "fraglab/errors.hpp"
#include "fraglab/harness.hpp"
#include "fraglab/io.hpp"
#include "fraglab/kernels.hpp"

namespace fraglab::harness {

namespace {

struct CommonOptions {
    std::string config_path;
    std::string out_dir = ".";
    std::string format = "csv";
    std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonOptions& opt, bool config_required = true) {
    auto* config = cmd->add_option("--config", opt.config_path, "JSON config file");
    if (config_required) config->required();
    cmd->add_option("--out", opt.out_dir, "output directory");
    cmd->add_option("--format", opt.format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
    cmd->add_option("--seed", opt.seed, "master seed override");
}

std::string out_path(const CommonOptions& opt, const std::string& name,
                     const std::string& ext) {
    return opt.out_dir + "/" + name + "." + ext;
}

nlohmann::json load_config(const CommonOptions& opt) {
    nlohmann::json cfg = io::load_json_file(opt.config_path);
    std::filesystem::create_directories(opt.out_dir);
    return cfg;
}

datagen::Population population_from_config(const nlohmann::json& cfg,
                                           const CommonOptions& opt) {
    if (cfg.contains("dgp")) {
        datagen::DGPConfig dgp = io::dgp_config_from_json(cfg["dgp"]);
        if (opt.seed) dgp.seed = *opt.seed;
        datagen::Population pop = datagen::generate_population(dgp);
        if (cfg.contains("strata")) {
            pop = datagen::attach_strata(std::move(pop), io::strata_spec_from_json(cfg["strata"]));
        }
        return pop;
    }
    if (cfg.contains("population_csv")) {
        datagen::Population pop =
            io::load_population_csv(cfg["population_csv"].get<std::string>());
        if (cfg.contains("preference")) {
            nlohmann::json wrapper = {{"n_users", pop.n_users()},
                                      {"beta1", nlohmann::json::array({0.0})},
                                      {"preference", cfg["preference"]}};
            datagen::DGPConfig shim = io::dgp_config_from_json(wrapper);
            pop.preference = shim.preference;
            pop.config.preference = shim.preference;
            pop.config.seed = opt.seed.value_or(cfg.value("seed", std::uint64_t{0}));
            pop.lambda =
                datagen::preference_lambda(pop.preference, pop.exposures, pop.config.seed);
        }
        return pop;
    }
    throw ConfigError("config needs either 'dgp' or 'population_csv'");
}

fragmentation::FragmentedDataset fragments_from_config(const nlohmann::json& cfg,
                                                       const CommonOptions& opt) {
    if (cfg.contains("fragments_csv")) {
        return io::load_fragments_csv(cfg["fragments_csv"].get<std::string>());
    }
    datagen::Population pop = population_from_config(cfg, opt);
    fragmentation::AssignmentMatrix a = fragmentation::draw_assignment(pop);
    return fragmentation::fragment(pop, a);
}

void emit_estimate(const CommonOptions& opt, const std::string& name,
                   const estimators::EstimateReport& rep) {
    if (opt.format == "json") {
        io::write_json(out_path(opt, name, "json"), io::to_json(rep));
    } else {
        io::write_estimate_csv(out_path(opt, name, "csv"), rep);
    }
    std::cout << name << ": " << rep.terms[0] << "=" << io::format_double(rep.coefficients[0]);
    for (std::size_t t = 1; t < rep.terms.size(); ++t) {
        std::cout << ", " << rep.terms[t] << "=" << io::format_double(rep.coefficients[t]);
    }
    std::cout << "\n";
}

int cmd_simulate(const CommonOptions& opt) {
    nlohmann::json cfg = load_config(opt);
    datagen::Population pop = population_from_config(cfg, opt);
    io::write_population_csv(out_path(opt, "population", "csv"), pop);
    std::cout << "simulate: wrote " << pop.n_users() << " users, J=" << pop.n_devices()
              << ", k=" << pop.n_covariates() << "\n";
    return 0;
}

int cmd_fragment(const CommonOptions& opt) {
    nlohmann::json cfg = load_config(opt);
    datagen::Population pop = population_from_config(cfg, opt);
    fragmentation::AssignmentMatrix a = fragmentation::draw_assignment(pop);
    fragmentation::FragmentedDataset f = fragmentation::fragment(pop, a);
    bool include_oracle = cfg.value("include_oracle", false);
    io::write_fragments_csv(out_path(opt, "fragments", "csv"), f, include_oracle);
    std::cout << "fragment: wrote " << f.n_fragments() << " fragments"
              << (include_oracle ? " (oracle column included)" : "") << "\n";
    return 0;
}

int cmd_estimate(const CommonOptions& opt) {
    nlohmann::json cfg = load_config(opt);
    std::string form_name = cfg.value("form", std::string("common-stacked"));
    fragmentation::ModelForm form = io::model_form_from_string(form_name);

    using fragmentation::ModelForm;
    if (form == ModelForm::true_common || form == ModelForm::true_device_specific) {
        datagen::Population pop = population_from_config(cfg, opt);
        emit_estimate(opt, "estimate_true", estimators::estimate_true(pop, form));
        return 0;
    }
    fragmentation::FragmentedDataset f = fragments_from_config(cfg, opt);
    if (form == ModelForm::device_split) {
        auto reports = estimators::estimate_fragmented_split(f.view());
        for (std::size_t j = 0; j < reports.size(); ++j) {
            emit_estimate(opt, "estimate_device" + std::to_string(j + 1), reports[j]);
        }
        return 0;
    }
    emit_estimate(opt, "estimate", estimators::estimate_fragmented(f.view(), form));
    return 0;
}

int cmd_bias(const CommonOptions& opt) {
    nlohmann::json cfg = load_config(opt);
    std::string form_name = cfg.value("form", std::string("common-stacked"));

    std::vector<linalg::Matrix> exposures;
    linalg::Matrix lambda;
    double beta0 = 0.0;
    std::vector<linalg::Vector> betas;
    std::string lambda_source = "model";

    if (cfg.contains("dgp")) {
        datagen::Population pop = population_from_config(cfg, opt);
        exposures = pop.exposures;
        lambda = pop.lambda;
        beta0 = pop.config.beta0;
        for (std::size_t j = 0; j < pop.n_devices(); ++j) {
            betas.push_back(pop.config.device_specific()
                                ? linalg::Vector(pop.config.beta_by_device[j])
                                : linalg::Vector(pop.config.beta1));
        }
    } else {
        fragmentation::FragmentedDataset f = fragments_from_config(cfg, opt);
        if (!f.has_oracle()) {
            throw ConfigError("bias from fragments needs the true_user_id oracle column");
        }
        // Rebuild per-user exposures from the oracle linkage.
        std::map<std::int64_t, std::size_t> slot;
        for (auto uid : f.oracle_user) slot.emplace(uid, slot.size());
        exposures.assign(f.n_devices, linalg::Matrix(slot.size(), f.n_covariates));
        for (std::size_t r = 0; r < f.n_fragments(); ++r) {
            for (std::size_t c = 0; c < f.n_covariates; ++c) {
                exposures[static_cast<std::size_t>(f.device[r])](slot[f.oracle_user[r]], c) =
                    f.x(r, c);
            }
        }
        linalg::Vector lambda_const;
        if (cfg.contains("lambda")) {
            lambda_const = cfg["lambda"].get<std::vector<double>>();
            lambda_source = "supplied";
        } else {
            lambda_const = biascalc::estimate_lambda_purchase_share(f);
            lambda_source = "plug-in";
        }
        if (lambda_const.size() != f.n_devices) {
            throw ConfigError("lambda must have one entry per device");
        }
        lambda = linalg::Matrix(slot.size(), f.n_devices);
        for (std::size_t i = 0; i < slot.size(); ++i) {
            for (std::size_t j = 0; j < f.n_devices; ++j) lambda(i, j) = lambda_const[j];
        }
        beta0 = cfg.value("beta0", 0.0);
        if (cfg.contains("betas")) {
            for (const auto& b : cfg["betas"]) {
                betas.push_back(b.get<std::vector<double>>());
            }
        } else if (cfg.contains("beta1")) {
            linalg::Vector b = cfg["beta1"].get<std::vector<double>>();
            betas.assign(f.n_devices, b);
        } else {
            throw ConfigError("bias from fragments needs beta1 or betas");
        }
    }

    if (form_name == "device-split") {
        biascalc::SplitBias bias =
            biascalc::bias_device_specific_J_split(exposures, lambda, beta0, betas);
        io::write_json(out_path(opt, "bias_split", "json"), io::to_json(bias));
        std::cout << "bias: device-split decomposition written\n";
        return 0;
    }

    biascalc::BiasDecomposition bias;
    if (form_name == "device-specific-stacked") {
        bias = biascalc::bias_device_specific_J_stacked(exposures, lambda, beta0, betas);
    } else if (form_name == "common-stacked") {
        bias = biascalc::bias_common_J(exposures, lambda, beta0, betas.front());
    } else {
        throw ConfigError("bias: form must be common-stacked, device-specific-stacked, "
                          "or device-split");
    }
    bias.lambda_source = lambda_source;
    io::write_json(out_path(opt, "bias", "json"), io::to_json(bias));
    std::cout << "bias: total slope bias";
    for (double b : bias.total_bias) std::cout << ' ' << io::format_double(b);
    std::cout << "\n";
    return 0;
}

int cmd_montecarlo(const CommonOptions& opt) {
    nlohmann::json cfg = load_config(opt);
    MonteCarloConfig mc;
    mc.dgp = io::dgp_config_from_json(cfg.at("dgp"));
    if (opt.seed) mc.dgp.seed = *opt.seed;
    mc.form = io::model_form_from_string(cfg.value("form", std::string("common-stacked")));
    mc.reps = cfg.value("reps", std::size_t{1000});
    mc.z_threshold = cfg.value("z_threshold", 5.0);
    if (cfg.contains("mc_seed")) mc.mc_seed = cfg["mc_seed"].get<std::uint64_t>();

    MCReport report = run_monte_carlo(mc);
    write_mc_csv(out_path(opt, "montecarlo", "csv"), report);
    std::cout << "montecarlo: " << report.reps << " reps, form " << report.form_name << ", "
              << (report.all_pass ? "all terms pass" : "TERMS FAILED") << " ("
              << io::format_double(report.runtime_seconds) << "s)\n";
    return 0;
}

int cmd_aggregate(const CommonOptions& opt) {
    nlohmann::json cfg = load_config(opt);
    fragmentation::FragmentedDataset f = fragments_from_config(cfg, opt);
    std::vector<std::string> vars = cfg.at("vars").get<std::vector<std::string>>();
    std::int64_t min_rows = cfg.value("min_bin_rows", std::int64_t{1});

    correctives::AggregatedDataset agg = correctives::aggregate_strata(f, vars, min_rows);
    io::write_aggregated_csv(out_path(opt, "aggregated", "csv"), agg);
    std::cout << "aggregate: " << agg.bins.size() << " bins, " << agg.dropped_bins
              << " dropped (" << agg.dropped_fragments << " fragments)\n";

    if (cfg.value("estimate", true)) {
        fragmentation::ModelForm form = io::model_form_from_string(
            cfg.value("form", std::string("aggregated-common")));
        bool plain = cfg.value("plain_intercept", false);
        emit_estimate(opt, "estimate_aggregated",
                      correctives::estimate_aggregated(agg, form, plain));
    }
    return 0;
}

int cmd_debias(const CommonOptions& opt) {
    nlohmann::json cfg = load_config(opt);
    bool force = cfg.value("force", false);

    std::optional<estimators::EstimateReport> matched;
    fragmentation::FragmentedDataset f;
    biascalc::STCReport stc;
    double j_used;
    if (cfg.contains("dgp")) {
        datagen::Population pop = population_from_config(cfg, opt);
        fragmentation::AssignmentMatrix a = fragmentation::draw_assignment(pop);
        f = fragmentation::fragment(pop, a);
        stc = biascalc::check_stc(pop);
        matched = estimators::estimate_true(pop, fragmentation::ModelForm::true_common);
        j_used = cfg.value("j", static_cast<double>(pop.n_devices()));
    } else {
        f = fragments_from_config(cfg, opt);
        stc = biascalc::check_stc(f);
        j_used = cfg.value("j", static_cast<double>(f.n_devices));
    }

    estimators::EstimateReport raw =
        estimators::estimate_fragmented(f.view(), fragmentation::ModelForm::common_stacked);
    correctives::DebiasReport rep = correctives::debias_stc(raw, j_used, stc, force, matched);
    io::write_json(out_path(opt, "debias", "json"), io::to_json(rep));
    std::cout << "debias: J=" << io::format_double(rep.j_used) << ", debiased slope";
    for (std::size_t t = 1; t < rep.debiased_coefficients.size(); ++t) {
        std::cout << ' ' << io::format_double(rep.debiased_coefficients[t]);
    }
    std::cout << "\n";
    return 0;
}

int cmd_diagnose(const CommonOptions& opt) {
    nlohmann::json cfg = load_config(opt);
    fragmentation::FragmentedDataset f = fragments_from_config(cfg, opt);
    if (!f.has_oracle()) {
        throw ConfigError("diagnose needs fragments with the true_user_id oracle column");
    }
    biascalc::CorrelationDiagnostic diag = biascalc::correlation_diagnostic(f);
    biascalc::STCReport stc = biascalc::check_stc(f);
    io::write_json(out_path(opt, "diagnose_correlation", "json"), io::to_json(diag));
    io::write_json(out_path(opt, "diagnose_stc", "json"), io::to_json(stc));
    std::cout << "diagnose: proportionality stat "
              << io::format_double(diag.proportionality_stat) << ", STC "
              << (stc.satisfied() ? "satisfied" : "violated") << "\n";
    return 0;
}

int cmd_sweep_mixed(const CommonOptions& opt) {
    nlohmann::json cfg = load_config(opt);
    datagen::Population pop = population_from_config(cfg, opt);
    fragmentation::AssignmentMatrix a = fragmentation::draw_assignment(pop);
    std::vector<double> grid;
    if (cfg.contains("r_grid")) {
        grid = cfg["r_grid"].get<std::vector<double>>();
    } else {
        for (int i = 0; i <= 10; ++i) grid.push_back(0.1 * i);
    }
    correctives::MixedSweepResult sweep = correctives::sweep_mixed(pop, a, grid);
    io::write_sweep_csv(out_path(opt, "sweep_mixed", "csv"), sweep);
    std::cout << "sweep-mixed: " << grid.size() << " grid points, non-monotone flag "
              << (sweep.any_interior_exceeds_full ? "raised" : "clear") << "\n";
    return 0;
}

}  // namespace

int cli(int argc, char** argv) {
    CLI::App app{"identity-fragmentation bias toolkit"};
    app.require_subcommand(1);

    CommonOptions simulate_opt, fragment_opt, estimate_opt, bias_opt, mc_opt, agg_opt,
        debias_opt, diagnose_opt, sweep_opt;

    add_common(app.add_subcommand("simulate", "generate a synthetic population"), simulate_opt);
    add_common(app.add_subcommand("fragment", "split a population into device fragments"),
               fragment_opt);
    add_common(app.add_subcommand("estimate", "fit OLS on true or fragmented data"),
               estimate_opt);
    add_common(app.add_subcommand("bias", "closed-form bias decomposition"), bias_opt);
    add_common(app.add_subcommand("montecarlo", "verify analytic bias against MC means"),
               mc_opt);
    add_common(app.add_subcommand("aggregate", "stratified aggregation"), agg_opt);
    add_common(app.add_subcommand("debias", "STC de-biasing (J times the estimate)"),
               debias_opt);
    add_common(app.add_subcommand("diagnose", "correlation-proportionality diagnostic"),
               diagnose_opt);
    add_common(app.add_subcommand("sweep-mixed", "mixed-estimator sweep over r"), sweep_opt);

    CommonOptions scenario_opt;
    std::string scenario_name;
    CLI::App* scenario_cmd = app.add_subcommand("scenario", "run a built-in scenario");
    scenario_cmd->add_option("name", scenario_name, "scenario name");
    add_common(scenario_cmd, scenario_opt, false);

    bool list_scenarios = false;
    scenario_cmd->add_flag("--list", list_scenarios, "list scenario names");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (app.got_subcommand("simulate")) return cmd_simulate(simulate_opt);
        if (app.got_subcommand("fragment")) return cmd_fragment(fragment_opt);
        if (app.got_subcommand("estimate")) return cmd_estimate(estimate_opt);
        if (app.got_subcommand("bias")) return cmd_bias(bias_opt);
        if (app.got_subcommand("montecarlo")) return cmd_montecarlo(mc_opt);
        if (app.got_subcommand("aggregate")) return cmd_aggregate(agg_opt);
        if (app.got_subcommand("debias")) return cmd_debias(debias_opt);
        if (app.got_subcommand("diagnose")) return cmd_diagnose(diagnose_opt);
        if (app.got_subcommand("sweep-mixed")) return cmd_sweep_mixed(sweep_opt);
        if (app.got_subcommand("scenario")) {
            if (list_scenarios) {
                for (const auto& name : scenario_names()) std::cout << name << "\n";
                return 0;
            }
            if (scenario_name.empty()) {
                std::cerr << "error: scenario needs a name (or --list)\n";
                return 1;
            }
            std::filesystem::create_directories(scenario_opt.out_dir);
            ScenarioOptions options{scenario_opt.out_dir, scenario_opt.format,
                                    scenario_opt.seed};
            run_scenario(scenario_name, options);
            return 0;
        }
    } catch (const SingularDesignError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

}  // namespace fraglab::harness
