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

#include "selconf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace selconf {

namespace {

void require_nonempty(const ConfidenceTable& table) {
  if (table.empty()) fail("empty confidence table");
}

void require_target(double target_risk) {
  if (!(target_risk >= 0.0 && target_risk < 1.0)) {
    fail("target risk must lie in [0,1)");
  }
}

}  // namespace

OperatingPoint coverage_risk_at(const ConfidenceTable& table, double gamma) {
  require_nonempty(table);
  std::size_t accepted = 0;
  std::size_t errors = 0;
  for (const auto& e : table.entries()) {
    if (e.confidence > gamma) {
      ++accepted;
      if (!e.correct) ++errors;
    }
  }
  OperatingPoint op;
  op.coverage = static_cast<double>(accepted) / static_cast<double>(table.size());
  if (accepted > 0) {
    op.risk = static_cast<double>(errors) / static_cast<double>(accepted);
  }
  return op;
}

RcCurve rc_curve(const ConfidenceTable& table) {
  require_nonempty(table);
  const auto& entries = table.entries();
  std::vector<std::size_t> order(entries.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return entries[a].confidence > entries[b].confidence;
  });

  const double n = static_cast<double>(entries.size());
  RcCurve curve;
  std::size_t accepted = 0;
  std::size_t errors = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double v = entries[order[i]].confidence;
    while (i < order.size() && entries[order[i]].confidence == v) {
      ++accepted;
      if (!entries[order[i]].correct) ++errors;
      ++i;
    }
    // Just below v: the next lower distinct value, or accept-all at the end.
    const double gamma = i < order.size() ? entries[order[i]].confidence
                                          : -std::numeric_limits<double>::infinity();
    curve.points.push_back({gamma, static_cast<double>(accepted) / n,
                            static_cast<double>(errors) / static_cast<double>(accepted)});
  }
  return curve;
}

double aurc(const RcCurve& curve) {
  double area = 0.0;
  double prev = 0.0;
  for (const auto& p : curve.points) {
    area += p.risk * (p.coverage - prev);
    prev = p.coverage;
  }
  return area;
}

double aurc(const ConfidenceTable& table) { return aurc(rc_curve(table)); }

CoverageAtRisk c_at_r(const RcCurve& curve, double target_risk) {
  require_target(target_risk);
  CoverageAtRisk best;
  for (const auto& p : curve.points) {
    if (p.risk <= target_risk && p.coverage > best.coverage) {
      best.coverage = p.coverage;
      best.gamma = p.gamma;
    }
  }
  return best;
}

CoverageAtRisk c_at_r(const ConfidenceTable& table, double target_risk) {
  require_target(target_risk);
  return c_at_r(rc_curve(table), target_risk);
}

double ece(const ConfidenceTable& table, int m_bins) {
  require_nonempty(table);
  if (m_bins < 1) fail("ece needs at least one bin");
  std::vector<double> conf_sum(m_bins, 0.0);
  std::vector<double> hit_sum(m_bins, 0.0);
  std::vector<std::size_t> count(m_bins, 0);
  const double m = static_cast<double>(m_bins);
  for (const auto& e : table.entries()) {
    int j = static_cast<int>(std::ceil(e.confidence * m)) - 1;
    // Guard upper edges against rounding in confidence * m.
    if (j > 0 && e.confidence <= static_cast<double>(j) / m) --j;
    j = std::clamp(j, 0, m_bins - 1);
    conf_sum[j] += e.confidence;
    hit_sum[j] += e.correct ? 1.0 : 0.0;
    ++count[j];
  }
  const double n = static_cast<double>(table.size());
  double total = 0.0;
  for (int j = 0; j < m_bins; ++j) {
    if (count[j] == 0) continue;
    const double c = static_cast<double>(count[j]);
    total += (c / n) * std::abs(hit_sum[j] / c - conf_sum[j] / c);
  }
  return total;
}

MetricsReport evaluate(const ConfidenceTable& table, std::span<const double> risks,
                       int m_bins) {
  require_nonempty(table);
  const RcCurve curve = rc_curve(table);
  MetricsReport report;
  report.method_name = table.method_name();
  for (double r : risks) report.c_at_r[r] = c_at_r(curve, r).coverage;
  report.aurc = aurc(curve);
  report.ece = ece(table, m_bins);
  report.n = table.size();
  report.accuracy = table.accuracy();
  return report;
}

MetricsReport oracle_metrics(const std::vector<bool>& correct,
                             std::span<const double> risks) {
  if (correct.empty()) fail("oracle metrics of an empty set");
  const std::size_t n = correct.size();
  const auto n_correct =
      static_cast<std::size_t>(std::count(correct.begin(), correct.end(), true));
  // Accept correct records first, one at a time. With 0/1 scores every
  // error shares one tie group, and the grouped sweep would charge the whole
  // group at its end-of-group risk; the per-record curve is the true bound.
  RcCurve curve;
  curve.points.reserve(n);
  for (std::size_t k = 1; k <= n; ++k) {
    const double errors = k > n_correct ? static_cast<double>(k - n_correct) : 0.0;
    const double gamma = k < n_correct ? 1.0 : (k < n ? 0.0 : -std::numeric_limits<double>::infinity());
    curve.points.push_back({gamma, static_cast<double>(k) / static_cast<double>(n),
                            errors / static_cast<double>(k)});
  }
  MetricsReport report;
  report.method_name = "oracle";
  for (double r : risks) report.c_at_r[r] = c_at_r(curve, r).coverage;
  report.aurc = aurc(curve);
  report.ece = 0.0;  // every record sits at its own correctness bit
  report.n = n;
  report.accuracy = static_cast<double>(n_correct) / static_cast<double>(n);
  return report;
}

std::optional<double> select_threshold(const ConfidenceTable& val, double target_risk) {
  return c_at_r(val, target_risk).gamma;
}

TransferResult threshold_transfer(const ConfidenceTable& val, const ConfidenceTable& test,
                                  double target_risk) {
  const auto gamma = select_threshold(val, target_risk);
  if (!gamma) {
    throw Error(ErrorKind::kInfeasible,
                "no validation threshold meets target risk " + std::to_string(target_risk));
  }
  const auto op = coverage_risk_at(test, *gamma);
  if (!op.risk) {
    throw Error(ErrorKind::kInfeasible,
                "validation threshold accepts no test record");
  }
  TransferResult out;
  out.gamma = *gamma;
  out.test_risk = *op.risk;
  out.test_coverage = op.coverage;
  out.delta_risk = *op.risk - target_risk;
  out.delta_coverage = op.coverage - c_at_r(test, target_risk).coverage;
  return out;
}

std::string risk_column(double risk) {
  std::ostringstream os;
  os << "c@" << std::round(risk * 1e6) / 1e4;
  return os.str();
}

std::map<std::string, MeanStd> aggregate_seeds(std::span<const MetricsReport> reports) {
  if (reports.size() < 2) fail("aggregation needs at least two reports");
  for (const auto& r : reports) {
    if (r.method_name != reports.front().method_name) {
      fail("cannot aggregate reports of different methods");
    }
  }
  std::map<std::string, std::vector<double>> columns;
  for (const auto& r : reports) {
    for (const auto& [risk, cov] : r.c_at_r) columns[risk_column(risk)].push_back(cov);
    columns["aurc"].push_back(r.aurc);
    columns["ece"].push_back(r.ece);
    columns["accuracy"].push_back(r.accuracy);
  }
  std::map<std::string, MeanStd> out;
  for (const auto& [name, values] : columns) {
    if (values.size() != reports.size()) fail("reports disagree on target risks");
    const double k = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / k;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    out[name] = {mean, std::sqrt(ss / (k - 1.0))};
  }
  return out;
}

}  // namespace selconf
