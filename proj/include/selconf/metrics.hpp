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

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "selconf/dataset.hpp"

namespace selconf {

/// Default target risks for C@R reporting.
inline const std::vector<double> kDefaultRisks = {0.01, 0.05, 0.10, 0.20};
inline constexpr int kDefaultEceBins = 10;

/// Operating point of the selector s(x) > gamma.
struct OperatingPoint {
  double coverage = 0.0;
  /// Empty when nothing is accepted.
  std::optional<double> risk;
};

OperatingPoint coverage_risk_at(const ConfidenceTable& table, double gamma);

struct RcPoint {
  double gamma;
  double coverage;
  double risk;
};

/// Risk-coverage curve over the descending threshold sweep. Tied
/// confidences enter together; the last point (gamma = -inf) accepts all.
struct RcCurve {
  std::vector<RcPoint> points;
};

RcCurve rc_curve(const ConfidenceTable& table);

/// Step integral of the risk-coverage curve.
double aurc(const ConfidenceTable& table);
double aurc(const RcCurve& curve);

struct CoverageAtRisk {
  double coverage = 0.0;
  std::optional<double> gamma;
};

/// Largest coverage over every threshold whose risk is at most target_risk.
CoverageAtRisk c_at_r(const ConfidenceTable& table, double target_risk);
CoverageAtRisk c_at_r(const RcCurve& curve, double target_risk);

/// Equal-width expected calibration error; bin j covers ((j-1)/m, j/m] and
/// the first bin also takes 0.
double ece(const ConfidenceTable& table, int m_bins = kDefaultEceBins);

struct MetricsReport {
  std::string method_name;
  std::map<double, double> c_at_r;
  double aurc = 0.0;
  double ece = 0.0;
  std::size_t n = 0;
  double accuracy = 0.0;
};

MetricsReport evaluate(const ConfidenceTable& table,
                       std::span<const double> risks = kDefaultRisks,
                       int m_bins = kDefaultEceBins);

/// Metrics of the ideal selector whose confidence is the correctness bit.
MetricsReport oracle_metrics(const std::vector<bool>& correct,
                             std::span<const double> risks = kDefaultRisks);

/// Threshold achieving C@R on validation data; empty when infeasible.
std::optional<double> select_threshold(const ConfidenceTable& val, double target_risk);

struct TransferResult {
  double gamma;
  double delta_risk;
  double delta_coverage;
  double test_risk;
  double test_coverage;
};

/// Applies the validation threshold to test data. Throws Error of kind
/// kInfeasible when validation admits no threshold.
TransferResult threshold_transfer(const ConfidenceTable& val, const ConfidenceTable& test,
                                  double target_risk);

struct MeanStd {
  double mean;
  double std;
};

/// Keys: "c@<percent>", "aurc", "ece", "accuracy".
std::map<std::string, MeanStd> aggregate_seeds(std::span<const MetricsReport> reports);

/// Column name used for a target risk, e.g. 0.05 -> "c@5".
std::string risk_column(double risk);

}  // namespace selconf
