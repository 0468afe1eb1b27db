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

#include "fraglab/io.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "fraglab/errors.hpp"

namespace fraglab::io {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) {
        // trim surrounding whitespace
        std::size_t b = field.find_first_not_of(" \t\r");
        std::size_t e = field.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

double parse_double(const std::string& s, long row, const std::string& col) {
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size()) {
        throw ParseError("non-numeric value '" + s + "' in column " + col, row);
    }
    return v;
}

long parse_long(const std::string& s, long row, const std::string& col) {
    char* end = nullptr;
    long v = std::strtol(s.c_str(), &end, 10);
    if (s.empty() || end != s.c_str() + s.size()) {
        throw ParseError("non-integer value '" + s + "' in column " + col, row);
    }
    return v;
}

// Parses "x{c}_d{j}" -> (c, j), both 1-based; returns false if not that shape.
bool parse_exposure_header(const std::string& name, std::size_t& c, std::size_t& j) {
    if (name.size() < 4 || name[0] != 'x') return false;
    std::size_t underscore = name.find("_d");
    if (underscore == std::string::npos) return false;
    std::string cs = name.substr(1, underscore - 1);
    std::string js = name.substr(underscore + 2);
    if (cs.empty() || js.empty()) return false;
    for (char ch : cs) if (!std::isdigit(static_cast<unsigned char>(ch))) return false;
    for (char ch : js) if (!std::isdigit(static_cast<unsigned char>(ch))) return false;
    c = std::stoul(cs);
    j = std::stoul(js);
    return c >= 1 && j >= 1;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open '" + path + "' for writing");
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "' for reading");
    return in;
}

}  // namespace

void write_population_csv(const std::string& path, const datagen::Population& pop) {
    std::ofstream out = open_out(path);
    const std::size_t k = pop.n_covariates();
    const std::size_t jd = pop.n_devices();

    out << "user_id,y";
    for (std::size_t c = 1; c <= k; ++c) {
        for (std::size_t j = 1; j <= jd; ++j) out << ",x" << c << "_d" << j;
    }
    for (const auto& name : pop.strata_names) out << ",s_" << name;
    out << "\n";

    for (std::size_t i = 0; i < pop.n_users(); ++i) {
        out << (i + 1) << ',' << format_double(pop.outcomes[i]);
        for (std::size_t c = 0; c < k; ++c) {
            for (std::size_t j = 0; j < jd; ++j) {
                out << ',' << format_double(pop.exposures[j](i, c));
            }
        }
        for (const auto& column : pop.strata) out << ',' << column[i];
        out << "\n";
    }
}

datagen::Population load_population_csv(const std::string& path) {
    std::ifstream in = open_in(path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty file: " + path, 1);
    std::vector<std::string> header = split_csv_line(line);

    long y_col = -1, id_col = -1;
    std::size_t k = 0, jd = 0;
    struct ExposureColumn { std::size_t col, c, j; };
    std::vector<ExposureColumn> exposure_cols;
    std::vector<std::pair<std::size_t, std::string>> strata_cols;

    for (std::size_t col = 0; col < header.size(); ++col) {
        const std::string& name = header[col];
        std::size_t c, j;
        if (name == "user_id") {
            id_col = static_cast<long>(col);
        } else if (name == "y") {
            y_col = static_cast<long>(col);
        } else if (parse_exposure_header(name, c, j)) {
            exposure_cols.push_back({col, c, j});
            k = std::max(k, c);
            jd = std::max(jd, j);
        } else if (name.rfind("s_", 0) == 0) {
            strata_cols.emplace_back(col, name.substr(2));
        } else {
            throw ParseError("unrecognized column '" + name + "'", 1);
        }
    }
    if (id_col < 0) throw ParseError("missing column user_id", 1);
    if (y_col < 0) throw ParseError("missing column y", 1);
    if (exposure_cols.size() != k * jd || k == 0 || jd < 2) {
        throw ParseError("incomplete exposure column grid (need every x{c}_d{j}, J >= 2)", 1);
    }

    std::vector<linalg::Vector> rows;
    std::vector<std::vector<int>> strata(strata_cols.size());
    linalg::Vector y_values;
    long row_number = 1;
    while (std::getline(in, line)) {
        ++row_number;
        if (line.empty()) continue;
        std::vector<std::string> fields = split_csv_line(line);
        if (fields.size() != header.size()) {
            throw ParseError("expected " + std::to_string(header.size()) + " fields, got " +
                                 std::to_string(fields.size()),
                             row_number);
        }
        y_values.push_back(parse_double(fields[y_col], row_number, "y"));
        linalg::Vector xs(k * jd);
        for (const auto& ec : exposure_cols) {
            xs[(ec.j - 1) * k + (ec.c - 1)] =
                parse_double(fields[ec.col], row_number, header[ec.col]);
        }
        rows.push_back(std::move(xs));
        for (std::size_t s = 0; s < strata_cols.size(); ++s) {
            strata[s].push_back(static_cast<int>(
                parse_long(fields[strata_cols[s].first], row_number, header[strata_cols[s].first])));
        }
    }
    if (rows.empty()) throw ParseError("no rows", row_number);

    datagen::Population pop;
    const std::size_t n = rows.size();
    pop.outcomes = std::move(y_values);
    pop.noise.assign(n, 0.0);
    pop.exposures.assign(jd, linalg::Matrix(n, k));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < jd; ++j) {
            for (std::size_t c = 0; c < k; ++c) pop.exposures[j](i, c) = rows[i][j * k + c];
        }
    }
    for (const auto& [col, name] : strata_cols) pop.strata_names.push_back(name);
    pop.strata = std::move(strata);
    pop.preference.kind = datagen::PreferenceKind::external;
    pop.config.n_users = n;
    pop.config.n_devices = jd;
    pop.config.n_covariates = k;
    pop.config.preference = pop.preference;
    return pop;
}

void write_fragments_csv(const std::string& path, const fragmentation::FragmentedDataset& f,
                         bool include_oracle) {
    std::ofstream out = open_out(path);
    out << "fragment_id,device,y";
    for (std::size_t c = 1; c <= f.n_covariates; ++c) out << ",x" << c;
    for (const auto& name : f.strata_names) out << ",s_" << name;
    if (include_oracle && f.has_oracle()) out << ",true_user_id";
    out << "\n";

    for (std::size_t r = 0; r < f.n_fragments(); ++r) {
        out << f.fragment_id[r] << ',' << (f.device[r] + 1) << ',' << format_double(f.y[r]);
        for (std::size_t c = 0; c < f.n_covariates; ++c) out << ',' << format_double(f.x(r, c));
        for (const auto& column : f.strata) out << ',' << column[r];
        if (include_oracle && f.has_oracle()) out << ',' << (f.oracle_user[r] + 1);
        out << "\n";
    }
}

fragmentation::FragmentedDataset load_fragments_csv(const std::string& path) {
    std::ifstream in = open_in(path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty file: " + path, 1);
    std::vector<std::string> header = split_csv_line(line);

    long id_col = -1, device_col = -1, y_col = -1, oracle_col = -1;
    std::vector<std::pair<std::size_t, std::size_t>> x_cols;  // (column, covariate-1)
    std::vector<std::pair<std::size_t, std::string>> strata_cols;
    for (std::size_t col = 0; col < header.size(); ++col) {
        const std::string& name = header[col];
        if (name == "fragment_id") id_col = static_cast<long>(col);
        else if (name == "device") device_col = static_cast<long>(col);
        else if (name == "y") y_col = static_cast<long>(col);
        else if (name == "true_user_id") oracle_col = static_cast<long>(col);
        else if (name.rfind("s_", 0) == 0) strata_cols.emplace_back(col, name.substr(2));
        else if (name.size() > 1 && name[0] == 'x') {
            std::string cs = name.substr(1);
            for (char ch : cs) {
                if (!std::isdigit(static_cast<unsigned char>(ch))) {
                    throw ParseError("unrecognized column '" + name + "'", 1);
                }
            }
            x_cols.emplace_back(col, std::stoul(cs) - 1);
        } else {
            throw ParseError("unrecognized column '" + name + "'", 1);
        }
    }
    if (id_col < 0 || device_col < 0 || y_col < 0 || x_cols.empty()) {
        throw ParseError("fragment CSV needs fragment_id, device, y, x1..", 1);
    }
    std::size_t k = 0;
    for (const auto& [col, c] : x_cols) k = std::max(k, c + 1);
    if (x_cols.size() != k) throw ParseError("exposure columns must be x1..xk with no gaps", 1);

    struct Row {
        std::int64_t id;
        int device;
        double y;
        linalg::Vector x;
        std::vector<int> strata;
        std::int64_t user;
    };
    std::vector<Row> rows;
    long row_number = 1;
    int max_device = 0;
    while (std::getline(in, line)) {
        ++row_number;
        if (line.empty()) continue;
        std::vector<std::string> fields = split_csv_line(line);
        if (fields.size() != header.size()) {
            throw ParseError("expected " + std::to_string(header.size()) + " fields, got " +
                                 std::to_string(fields.size()),
                             row_number);
        }
        Row row;
        row.id = parse_long(fields[id_col], row_number, "fragment_id");
        row.device = static_cast<int>(parse_long(fields[device_col], row_number, "device"));
        if (row.device < 1) throw ParseError("device indices are 1-based", row_number);
        max_device = std::max(max_device, row.device);
        row.y = parse_double(fields[y_col], row_number, "y");
        row.x.resize(k);
        for (const auto& [col, c] : x_cols) {
            row.x[c] = parse_double(fields[col], row_number, header[col]);
        }
        for (const auto& [col, name] : strata_cols) {
            row.strata.push_back(static_cast<int>(parse_long(fields[col], row_number, header[col])));
        }
        row.user = oracle_col >= 0 ? parse_long(fields[oracle_col], row_number, "true_user_id") : -1;
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError("no rows", row_number);

    fragmentation::FragmentedDataset f;
    f.n_devices = static_cast<std::size_t>(max_device);
    f.n_covariates = k;
    const std::size_t nf = rows.size();
    f.fragment_id.resize(nf);
    f.device.resize(nf);
    f.y.resize(nf);
    f.x = linalg::Matrix(nf, k);
    f.strata_names.clear();
    for (const auto& [col, name] : strata_cols) f.strata_names.push_back(name);
    f.strata.assign(strata_cols.size(), std::vector<int>(nf));
    if (oracle_col >= 0) f.oracle_user.resize(nf);
    for (std::size_t r = 0; r < nf; ++r) {
        f.fragment_id[r] = rows[r].id;
        f.device[r] = rows[r].device - 1;
        f.y[r] = rows[r].y;
        for (std::size_t c = 0; c < k; ++c) f.x(r, c) = rows[r].x[c];
        for (std::size_t s = 0; s < strata_cols.size(); ++s) f.strata[s][r] = rows[r].strata[s];
        if (oracle_col >= 0) f.oracle_user[r] = rows[r].user - 1;
    }
    return f;
}

void write_estimate_csv(const std::string& path, const estimators::EstimateReport& rep) {
    std::ofstream out = open_out(path);
    out << "term,estimate,se,ci_lo,ci_hi\n";
    for (std::size_t i = 0; i < rep.terms.size(); ++i) {
        out << rep.terms[i] << ',' << format_double(rep.coefficients[i]) << ','
            << format_double(rep.standard_errors[i]) << ',' << format_double(rep.ci95[i].first)
            << ',' << format_double(rep.ci95[i].second) << "\n";
    }
}

void write_aggregated_csv(const std::string& path, const correctives::AggregatedDataset& agg) {
    std::ofstream out = open_out(path);
    for (const auto& v : agg.binning_vars) out << "s_" << v << ',';
    out << "n_fragments,y_sum";
    for (std::size_t c = 1; c <= agg.n_covariates; ++c) {
        for (std::size_t j = 1; j <= agg.n_devices; ++j) out << ",xsum" << c << "_d" << j;
    }
    out << "\n";
    for (const auto& bin : agg.bins) {
        for (int kval : bin.key) out << kval << ',';
        out << bin.n_fragments << ',' << format_double(bin.y_sum);
        for (std::size_t c = 0; c < agg.n_covariates; ++c) {
            for (std::size_t j = 0; j < agg.n_devices; ++j) {
                out << ',' << format_double(bin.x_sum_device[j * agg.n_covariates + c]);
            }
        }
        out << "\n";
    }
}

void write_sweep_csv(const std::string& path, const correctives::MixedSweepResult& sweep) {
    std::ofstream out = open_out(path);
    out << "r,term,bias,abs_bias,flag_nonmonotone\n";
    for (const auto& row : sweep.rows) {
        out << format_double(row.r) << ',' << row.term << ',' << format_double(row.bias) << ','
            << format_double(row.abs_bias) << ',' << (row.flag_nonmonotone ? 1 : 0) << "\n";
    }
}

namespace {

json vector_to_json(const linalg::Vector& v) {
    json arr = json::array();
    for (double x : v) arr.push_back(x);
    return arr;
}

json matrix_to_json(const linalg::Matrix& m) {
    json rows = json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

json to_json(const estimators::EstimateReport& rep) {
    json doc;
    doc["model_form"] = fragmentation::model_form_name(rep.form);
    doc["terms"] = rep.terms;
    doc["coefficients"] = vector_to_json(rep.coefficients);
    doc["standard_errors"] = vector_to_json(rep.standard_errors);
    json ci = json::array();
    for (const auto& [lo, hi] : rep.ci95) ci.push_back(json::array({lo, hi}));
    doc["ci95"] = std::move(ci);
    doc["n_rows"] = rep.n_rows;
    doc["n_params"] = rep.n_params;
    doc["condition_number"] = rep.condition_number;
    doc["rss"] = rep.rss;
    doc["sigma2_hat"] = rep.sigma2_hat;
    return doc;
}

json to_json(const biascalc::BiasDecomposition& bias) {
    json doc;
    doc["vartheta"] = matrix_to_json(bias.vartheta);
    doc["delta1"] = vector_to_json(bias.delta1);
    doc["delta2"] = vector_to_json(bias.delta2);
    doc["delta3"] = vector_to_json(bias.delta3);
    doc["total"] = vector_to_json(bias.total_bias);
    doc["model_form"] = fragmentation::model_form_name(bias.form);
    doc["lambda_source"] = bias.lambda_source;
    doc["intercept_bias"] = bias.intercept_bias;
    return doc;
}

json to_json(const biascalc::SplitBias& bias) {
    json doc;
    doc["model_form"] = "device-split";
    json devices = json::array();
    for (std::size_t j = 0; j < bias.bias.size(); ++j) {
        json d;
        d["device"] = j + 1;
        d["delta1"] = vector_to_json(bias.delta1[j]);
        d["delta2"] = vector_to_json(bias.delta2[j]);
        d["delta3"] = vector_to_json(bias.delta3[j]);
        d["total"] = vector_to_json(bias.bias[j]);
        devices.push_back(std::move(d));
    }
    doc["devices"] = std::move(devices);
    return doc;
}

json to_json(const biascalc::STCReport& rep) {
    json doc;
    doc["mean_gap"] = rep.mean_gap;
    doc["second_moment_gap"] = rep.second_moment_gap;
    doc["cross_corr"] = rep.cross_corr;
    doc["lambda_exposure_dependence"] = rep.lambda_exposure_dependence;
    doc["mean_ok"] = rep.mean_ok;
    doc["second_moment_ok"] = rep.second_moment_ok;
    doc["independence_ok"] = rep.independence_ok;
    doc["lambda_ok"] = rep.lambda_ok;
    doc["verdict"] = rep.satisfied() ? "satisfied" : "violated";
    doc["thresholds"] = {{"rel_gap", rep.thresholds.rel_gap},
                         {"max_abs_corr", rep.thresholds.max_abs_corr},
                         {"max_t", rep.thresholds.max_t}};
    doc["lambda_method"] = rep.lambda_method;
    return doc;
}

json to_json(const biascalc::CorrelationDiagnostic& diag) {
    json doc;
    doc["n_users"] = diag.n_users;
    doc["proportionality_stat"] = diag.proportionality_stat;
    json mats = json::array();
    for (std::size_t c = 0; c < diag.corr.size(); ++c) {
        json entry;
        entry["covariate"] = c + 1;
        entry["corr"] = matrix_to_json(diag.corr[c]);
        entry["diagonal_dominant"] = diag.diagonal_dominant[c];
        mats.push_back(std::move(entry));
    }
    doc["matrices"] = std::move(mats);
    return doc;
}

json to_json(const correctives::DebiasReport& rep) {
    json doc;
    doc["raw"] = to_json(rep.raw);
    doc["j_used"] = rep.j_used;
    doc["debiased_coefficients"] = vector_to_json(rep.debiased_coefficients);
    doc["debiased_se"] = vector_to_json(rep.debiased_se);
    if (std::isnan(rep.ci_inflation_vs_matched)) {
        doc["ci_inflation_vs_matched"] = nullptr;
    } else {
        doc["ci_inflation_vs_matched"] = rep.ci_inflation_vs_matched;
    }
    doc["forced"] = rep.forced;
    doc["stc"] = to_json(rep.stc);
    return doc;
}

json to_json(const estimators::MixedEstimateReport& rep) {
    json doc;
    doc["r"] = rep.r;
    doc["n_fragmented_users"] = rep.n_fragmented_users;
    doc["beta_mixed"] = vector_to_json(rep.beta_mixed);
    doc["beta_fragmented_only"] = vector_to_json(rep.beta_fragmented_only);
    doc["beta_linked_only"] = vector_to_json(rep.beta_linked_only);
    doc["omega"] = matrix_to_json(rep.omega);
    doc["identity_gap"] = rep.identity_gap;
    if (!rep.rounding_note.empty()) doc["rounding_note"] = rep.rounding_note;
    doc["pooled"] = to_json(rep.pooled);
    return doc;
}

void write_json(const std::string& path, const json& doc) {
    std::ofstream out = open_out(path);
    out << doc.dump(2) << "\n";
}

// --- configuration -----------------------------------------------------------

namespace {

std::vector<std::vector<double>> nested_doubles(const nlohmann::json& j, const std::string& key) {
    std::vector<std::vector<double>> out;
    for (const auto& row : j) {
        if (row.is_array()) {
            out.push_back(row.get<std::vector<double>>());
        } else {
            // scalar shorthand: one covariate
            out.push_back({row.get<double>()});
        }
    }
    if (out.empty()) throw ConfigError(key + ": empty array");
    return out;
}

}  // namespace

datagen::DGPConfig dgp_config_from_json(const nlohmann::json& j) {
    datagen::DGPConfig cfg;
    try {
        cfg.n_users = j.at("n_users").get<std::size_t>();
        cfg.n_devices = j.value("n_devices", std::size_t{2});
        cfg.n_covariates = j.value("n_covariates", std::size_t{1});
        cfg.beta0 = j.value("beta0", 0.0);
        if (j.contains("beta1")) {
            if (j["beta1"].is_array()) cfg.beta1 = j["beta1"].get<std::vector<double>>();
            else cfg.beta1 = {j["beta1"].get<double>()};
        }
        if (j.contains("beta_by_device")) {
            cfg.beta_by_device = nested_doubles(j["beta_by_device"], "beta_by_device");
        }
        cfg.noise_sigma = j.value("noise_sigma", 0.0);
        cfg.seed = j.value("seed", std::uint64_t{0});

        if (j.contains("exposure")) {
            const auto& e = j["exposure"];
            std::string family = e.value("family", "poisson");
            if (family == "poisson") cfg.exposure.family = datagen::ExposureFamily::poisson;
            else if (family == "lognormal-rounded")
                cfg.exposure.family = datagen::ExposureFamily::lognormal_rounded;
            else if (family == "fixed-matrix")
                cfg.exposure.family = datagen::ExposureFamily::fixed_matrix;
            else throw ConfigError("exposure.family: unknown family '" + family + "'");
            if (e.contains("mean")) cfg.exposure.mean = nested_doubles(e["mean"], "exposure.mean");
            if (e.contains("variance")) {
                cfg.exposure.variance = nested_doubles(e["variance"], "exposure.variance");
            }
            cfg.exposure.rho = e.value("rho", 0.0);
            if (e.contains("fixed")) {
                for (const auto& mat : e["fixed"]) {
                    auto rows = nested_doubles(mat, "exposure.fixed");
                    linalg::Matrix m(rows.size(), rows.front().size());
                    for (std::size_t i = 0; i < rows.size(); ++i) {
                        for (std::size_t c = 0; c < rows[i].size(); ++c) m(i, c) = rows[i][c];
                    }
                    cfg.exposure.fixed.push_back(std::move(m));
                }
            }
        }

        if (j.contains("preference")) {
            const auto& p = j["preference"];
            std::string kind = p.value("kind", "constant");
            if (kind == "constant") {
                cfg.preference.kind = datagen::PreferenceKind::constant;
                cfg.preference.lambda = p.at("lambda").get<std::vector<double>>();
            } else if (kind == "logistic-gap") {
                cfg.preference.kind = datagen::PreferenceKind::logistic_gap;
                cfg.preference.gamma0 = p.value("gamma0", 0.0);
                cfg.preference.gamma1 = p.at("gamma1").get<std::vector<double>>();
            } else if (kind == "dirichlet") {
                cfg.preference.kind = datagen::PreferenceKind::dirichlet;
                cfg.preference.dirichlet_alpha = p.at("alpha").get<std::vector<double>>();
            } else if (kind == "softmax-exposure") {
                cfg.preference.kind = datagen::PreferenceKind::softmax_exposure;
                cfg.preference.softmax_intercept = p.at("intercept").get<std::vector<double>>();
                cfg.preference.gamma1 = p.at("slope").get<std::vector<double>>();
            } else {
                throw ConfigError("preference.kind: unknown kind '" + kind + "'");
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return cfg;
}

datagen::StrataSpec strata_spec_from_json(const nlohmann::json& j) {
    datagen::StrataSpec spec;
    try {
        for (const auto& entry : j) {
            datagen::StrataVariable var;
            var.name = entry.at("name").get<std::string>();
            var.unique_key = entry.value("unique", false);
            if (!var.unique_key) var.cardinality = entry.at("cardinality").get<std::size_t>();
            spec.variables.push_back(std::move(var));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("strata config: ") + e.what());
    }
    return spec;
}

fragmentation::ModelForm model_form_from_string(const std::string& name) {
    using fragmentation::ModelForm;
    if (name == "common-stacked") return ModelForm::common_stacked;
    if (name == "device-specific-stacked") return ModelForm::device_specific_stacked;
    if (name == "device-split") return ModelForm::device_split;
    if (name == "true-common") return ModelForm::true_common;
    if (name == "true-device-specific") return ModelForm::true_device_specific;
    if (name == "aggregated-common") return ModelForm::aggregated_common;
    if (name == "aggregated-device-specific") return ModelForm::aggregated_device_specific;
    throw ConfigError("unknown model form '" + name + "'");
}

nlohmann::json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("invalid JSON in '") + path + "': " + e.what());
    }
}

}  // namespace fraglab::io
