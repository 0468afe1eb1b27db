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
#include <vector>

#include "fraglab/datagen.hpp"
#include "fraglab/fragmentation.hpp"
#include "fraglab/linalg.hpp"

// Closed-form conditional estimation bias under identity fragmentation.
//
// All expressions are conditional on the exposure matrices: the expectation
// runs over the assignment draw (through its conditional mean Lambda, the
// per-user purchase-device probabilities) and the regression noise. The
// slope-block bias always takes the form
//
//   E[b_slope | X] - b_slope = vartheta * (delta1 + delta2 + delta3)
//
// where vartheta is the bottom-right block of the inverse stacked Gram
// matrix (computed by Schur complement), delta1 is the outcome-splitting
// attenuation, delta2 the cross-fragment omitted-exposure term, and delta3
// the exposure/assignment covariance ("activity bias") term.

namespace fraglab::biascalc {

using fragmentation::ModelForm;

struct BiasDecomposition {
    linalg::Matrix vartheta;  // k x k (common) or J*k x J*k (device-specific)
    linalg::Vector delta1;
    linalg::Vector delta2;
    linalg::Vector delta3;
    linalg::Vector total_bias;  // vartheta * (delta1 + delta2 + delta3)
    // Conditional bias of the intercept estimate relative to beta0 / J,
    // computed through the dense inverse; kept for Monte Carlo verification.
    double intercept_bias = 0.0;
    ModelForm form = ModelForm::common_stacked;
    std::string lambda_source = "model";
};

// Slope-block of the inverse common-stacked Gram via Schur complement:
//   B22 = [sum_j Xj'Xj - (sum_j Xj'eta)(eta'sum_j Xj) / (J n)]^{-1}
linalg::Matrix vartheta_common(const std::vector<linalg::Matrix>& exposures);

// Device-specific analogue: block (i,j) of the Schur complement is
// Xi'Xi - Xi'eta eta'Xi/(Jn) on the diagonal and -Xi'eta eta'Xj/(Jn) off it.
linalg::Matrix vartheta_device_specific(const std::vector<linalg::Matrix>& exposures);

// J = 2 common-effect decomposition:
//   delta3 = (X1-X2)'(L - I/2) eta b0
//   delta1 = -[X1'(I-L)X1 + X2'L X2] b1
//   delta2 = [X1'L X2 + X2'(I-L)X1] b1   (equals X1'X2 b1 when k = 1)
BiasDecomposition bias_common(const linalg::Matrix& x1, const linalg::Matrix& x2,
                              const linalg::Vector& lambda, double beta0,
                              const linalg::Vector& beta1);

// Empirical-moment form of the k = 1 bias. Moments may come from data or be
// injected exactly. Missing lambda-weighted moments are filled from the
// constant lambda argument passed to bias_common_scalar.
struct MomentBundle {
    double mean_x1 = 0.0;       // x1-bar
    double mean_x2 = 0.0;       // x2-bar
    double mean_x1_sq = 0.0;    // x1^2-bar
    double mean_x2_sq = 0.0;    // x2^2-bar
    double mean_x1_x2 = 0.0;    // x1*x2-bar
    // lambda-weighted means; NaN = derive from the constant lambda argument
    double mean_lam_gap = nan_marker();    // lambda*(x1-x2)-bar
    double mean_lam_x1_sq = nan_marker();  // lambda*x1^2-bar
    double mean_lam_x2_sq = nan_marker();  // lambda*x2^2-bar

    static double nan_marker();
    static MomentBundle from_data(const linalg::Matrix& x1, const linalg::Matrix& x2,
                                  const linalg::Vector& lambda);
};

double bias_common_scalar(const MomentBundle& moments, double lambda, double beta0,
                          double beta1);

// J = 2 device-specific effects, stacked design [eta | X1 0 | 0 X2].
// Row blocks follow the two-device display; the cross term uses the exact
// conditional-mean grouping X1'L X2 b2 (transpose-equal to the displayed
// X2'L X1 b2 at k = 1).
BiasDecomposition bias_device_specific_stacked(const linalg::Matrix& x1,
                                               const linalg::Matrix& x2,
                                               const linalg::Vector& lambda, double beta0,
                                               const linalg::Vector& beta1,
                                               const linalg::Vector& beta2);

// Per-device fits on [eta, Xj]. The intercept column is partialled out, so
// every product is taken against mean-centered exposure columns; with
// exposure-independent preferences the beta0 term vanishes identically,
// which is the sense in which splitting removes activity bias.
struct SplitBias {
    // One entry per device: slope bias vector and its components.
    std::vector<linalg::Vector> bias;
    std::vector<linalg::Vector> delta1;
    std::vector<linalg::Vector> delta2;
    std::vector<linalg::Vector> delta3;
};

SplitBias bias_device_specific_split(const linalg::Matrix& x1, const linalg::Matrix& x2,
                                     const linalg::Vector& lambda, double beta0,
                                     const linalg::Vector& beta1,
                                     const linalg::Vector& beta2);

// J-fragment common effect. lambda is n x J with rows on the simplex
// (diagonals of the Lambda_j); delta2 sums Xj'Lj Xl over ordered pairs
// j != l, which reduces to the J = 2 expression above.
BiasDecomposition bias_common_J(const std::vector<linalg::Matrix>& exposures,
                                const linalg::Matrix& lambda, double beta0,
                                const linalg::Vector& beta1);

BiasDecomposition bias_device_specific_J_stacked(
    const std::vector<linalg::Matrix>& exposures, const linalg::Matrix& lambda, double beta0,
    const std::vector<linalg::Vector>& betas);

SplitBias bias_device_specific_J_split(const std::vector<linalg::Matrix>& exposures,
                                       const linalg::Matrix& lambda, double beta0,
                                       const std::vector<linalg::Vector>& betas);

// ---------------------------------------------------------------------------
// Symmetric Treatment Condition checks

struct StcThresholds {
    double rel_gap = 0.02;      // relative first/second moment gap
    double max_abs_corr = 0.02; // cross-fragment exposure correlation
    double max_t = 4.0;         // assignment-on-exposure slope significance
};

struct STCReport {
    double mean_gap = 0.0;
    double second_moment_gap = 0.0;
    double cross_corr = 0.0;
    double lambda_exposure_dependence = 0.0;  // max |t| across devices/slopes
    bool mean_ok = false;
    bool second_moment_ok = false;
    bool independence_ok = false;
    bool lambda_ok = false;
    StcThresholds thresholds;
    std::string lambda_method;  // how condition (B) was assessed

    bool satisfied() const {
        return mean_ok && second_moment_ok && independence_ok && lambda_ok;
    }
};

STCReport check_stc(const datagen::Population& pop, const StcThresholds& thresholds = {});
// Fragment-level variant; reconstructs users through the oracle linkage.
STCReport check_stc(const fragmentation::FragmentedDataset& f,
                    const StcThresholds& thresholds = {});

// ---------------------------------------------------------------------------
// Cross-correlation diagnostic (device-substitution screen)

struct CorrelationDiagnostic {
    // One J x J matrix per covariate: entry (jy, jx) is the correlation across
    // users between device-jy fragment outcomes and device-jx exposures.
    std::vector<linalg::Matrix> corr;
    // Max deviation of the column direction vectors from their common mean
    // direction; proportional columns give 0 up to sampling noise.
    double proportionality_stat = 0.0;
    // Flag per covariate and exposure device: diagonal entry exceeds the
    // column sum (substitution dominating the outcome-splitting attenuation).
    std::vector<std::vector<bool>> diagonal_dominant;
    std::size_t n_users = 0;
};

struct MatrixAnalysis {
    double proportionality_stat = 0.0;
    std::vector<bool> diagonal_dominant;
};

// Core analysis of a single correlation matrix (also usable on published
// tables). NaN entries (zero-variance columns) are excluded.
MatrixAnalysis analyze_correlation_matrix(const linalg::Matrix& corr);

CorrelationDiagnostic correlation_diagnostic(const fragmentation::FragmentedDataset& f);

// Plug-in Lambda when the truth is unknown: the observed share of purchases
// landing on each device, replicated per user. Reports using it are labeled
// "plug-in".
linalg::Vector estimate_lambda_purchase_share(const fragmentation::FragmentedDataset& f);

}  // namespace fraglab::biascalc
