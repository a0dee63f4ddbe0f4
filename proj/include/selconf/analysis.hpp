/*
 * Copyright 2026 The selconf Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <optional>
#include <span>
#include <string>
#include <unordered_map>

#include "selconf/dataset.hpp"

namespace selconf {

/// Raw second moments of the correctness errors of two confidence
/// estimators, eps_M = C_M - c and eps_R = C_R - c.
struct ErrorMoments {
  double sigma2_m = 0.0;
  double sigma2_r = 0.0;
  double sigma_mr = 0.0;
  std::size_t n = 1;
};

/// Joins on id; both tables must agree on the correctness of every id.
ErrorMoments error_moments(const ConfidenceTable& msp_table, const ConfidenceTable& rrh_table);

/// MSE-optimal constant weight on the first estimator,
/// (s2_r - s_mr) / (s2_m + s2_r - 2 s_mr). Throws on a zero denominator.
double alpha_star(const ErrorMoments& m);

struct FusionCondition {
  bool holds;
  double margin;  // min(s2_m, s2_r) - s_mr
};

/// True iff s_mr < min(s2_m, s2_r).
FusionCondition fusion_condition(const ErrorMoments& m);

/// MSE of alpha*C_M + (1-alpha)*C_R in terms of the moments.
double j_alpha(const ErrorMoments& m, double alpha);

struct FixedLambdaResult {
  double lambda;            // grid minimizer
  double mse;               // empirical MSE at lambda
  double closed_form;       // alpha_star clamped to [0,1]
  double mse_closed_form;   // empirical MSE at closed_form
  std::optional<double> adaptive_mse;
};

/// Grid search (step 0.001) over constant fusion weights, cross-checked
/// against the closed form. `adaptive` is an optional input-adaptive table
/// whose MSE against correctness is reported alongside.
FixedLambdaResult best_fixed_lambda(const ConfidenceTable& msp_table,
                                    const ConfidenceTable& rrh_table,
                                    const ConfidenceTable* adaptive = nullptr);

/// Mean squared error of a confidence table against its correctness bits.
double brier_score(const ConfidenceTable& table);

struct BrierDecomposition {
  double lhs;          // E[(s - c)^2]
  double refinement;   // E[(s - s*)^2]
  double irreducible;  // E[s*(1 - s*)]
  double residual;     // |lhs - refinement - irreducible|
};

BrierDecomposition brier_decomposition_check(
    const ConfidenceTable& table, const std::unordered_map<std::string, double>& true_posterior);

/// Standardized mean difference with Bessel-corrected pooled variance.
double cohens_d(std::span<const double> a, std::span<const double> b);

/// Exact 1-D Wasserstein-1 between empirical measures.
double wasserstein1(std::span<const double> a, std::span<const double> b);

/// KL(P||Q) between eps-smoothed equal-width histograms on [0,1].
double kl_divergence_hist(std::span<const double> p_samples, std::span<const double> q_samples,
                          int bins = 50, double eps = 1e-10);

struct SeparationReport {
  double cohens_d;
  double wasserstein;
  double kl;
  double aurc;
  int kl_bins = 50;
  double kl_eps = 1e-10;
};

/// Correct-vs-incorrect separation of a table's confidences; positive d
/// means correct predictions score higher. KL is KL(correct||incorrect).
SeparationReport separation_report(const ConfidenceTable& table, int kl_bins = 50,
                                   double kl_eps = 1e-10);

}  // namespace selconf
