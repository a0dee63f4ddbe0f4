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

#include "selconf/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "selconf/metrics.hpp"

namespace selconf {

namespace {

struct Joined {
  std::vector<double> m;
  std::vector<double> r;
  std::vector<double> c;
};

Joined join(const ConfidenceTable& a, const ConfidenceTable& b) {
  if (a.size() != b.size()) fail("tables cover different id sets");
  if (a.empty()) fail("empty confidence table");
  std::unordered_map<std::string, const ConfidenceEntry*> by_id;
  by_id.reserve(b.size());
  for (const auto& e : b.entries()) by_id.emplace(e.id, &e);
  Joined j;
  for (const auto& e : a.entries()) {
    const auto it = by_id.find(e.id);
    if (it == by_id.end()) fail("id '" + e.id + "' missing from second table");
    if (it->second->correct != e.correct) fail("tables disagree on correctness of '" + e.id + "'");
    j.m.push_back(e.confidence);
    j.r.push_back(it->second->confidence);
    j.c.push_back(e.correct ? 1.0 : 0.0);
  }
  return j;
}

double fused_mse(const Joined& j, double lambda) {
  double s = 0.0;
  for (std::size_t i = 0; i < j.c.size(); ++i) {
    const double e = lambda * j.m[i] + (1.0 - lambda) * j.r[i] - j.c[i];
    s += e * e;
  }
  return s / static_cast<double>(j.c.size());
}

double mean(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::vector<double> histogram(std::span<const double> samples, int bins) {
  std::vector<double> h(bins, 0.0);
  for (double x : samples) {
    const int j = std::clamp(static_cast<int>(std::floor(x * bins)), 0, bins - 1);
    h[j] += 1.0;
  }
  for (auto& v : h) v /= static_cast<double>(samples.size());
  return h;
}

}  // namespace

ErrorMoments error_moments(const ConfidenceTable& msp_table, const ConfidenceTable& rrh_table) {
  const Joined j = join(msp_table, rrh_table);
  ErrorMoments m;
  m.n = j.c.size();
  const double n = static_cast<double>(m.n);
  for (std::size_t i = 0; i < j.c.size(); ++i) {
    const double em = j.m[i] - j.c[i];
    const double er = j.r[i] - j.c[i];
    m.sigma2_m += em * em / n;
    m.sigma2_r += er * er / n;
    m.sigma_mr += em * er / n;
  }
  return m;
}

double alpha_star(const ErrorMoments& m) {
  const double denom = m.sigma2_m + m.sigma2_r - 2.0 * m.sigma_mr;
  if (!(denom > 0.0)) {
    fail_numeric("optimal fusion weight undefined: estimators have identical errors");
  }
  return (m.sigma2_r - m.sigma_mr) / denom;
}

FusionCondition fusion_condition(const ErrorMoments& m) {
  const double margin = std::min(m.sigma2_m, m.sigma2_r) - m.sigma_mr;
  return {margin > 0.0, margin};
}

double j_alpha(const ErrorMoments& m, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) fail("alpha must lie in [0,1]");
  return alpha * alpha * m.sigma2_m + (1.0 - alpha) * (1.0 - alpha) * m.sigma2_r +
         2.0 * alpha * (1.0 - alpha) * m.sigma_mr;
}

FixedLambdaResult best_fixed_lambda(const ConfidenceTable& msp_table,
                                    const ConfidenceTable& rrh_table,
                                    const ConfidenceTable* adaptive) {
  const Joined j = join(msp_table, rrh_table);
  FixedLambdaResult out{};
  out.mse = std::numeric_limits<double>::infinity();
  for (int step = 0; step <= 1000; ++step) {
    const double lambda = step / 1000.0;
    const double mse = fused_mse(j, lambda);
    if (mse < out.mse) {
      out.mse = mse;
      out.lambda = lambda;
    }
  }
  const ErrorMoments m = error_moments(msp_table, rrh_table);
  const double denom = m.sigma2_m + m.sigma2_r - 2.0 * m.sigma_mr;
  out.closed_form = denom > 0.0 ? std::clamp(alpha_star(m), 0.0, 1.0) : out.lambda;
  out.mse_closed_form = fused_mse(j, out.closed_form);
  if (adaptive) out.adaptive_mse = brier_score(*adaptive);
  return out;
}

double brier_score(const ConfidenceTable& table) {
  if (table.empty()) fail("empty confidence table");
  double s = 0.0;
  for (const auto& e : table.entries()) {
    const double d = e.confidence - (e.correct ? 1.0 : 0.0);
    s += d * d;
  }
  return s / static_cast<double>(table.size());
}

BrierDecomposition brier_decomposition_check(
    const ConfidenceTable& table, const std::unordered_map<std::string, double>& true_posterior) {
  if (table.empty()) fail("empty confidence table");
  BrierDecomposition d{};
  const double n = static_cast<double>(table.size());
  for (const auto& e : table.entries()) {
    const auto it = true_posterior.find(e.id);
    if (it == true_posterior.end()) fail("no true posterior for '" + e.id + "'");
    const double s = e.confidence;
    const double star = it->second;
    const double c = e.correct ? 1.0 : 0.0;
    d.lhs += (s - c) * (s - c) / n;
    d.refinement += (s - star) * (s - star) / n;
    d.irreducible += star * (1.0 - star) / n;
  }
  d.residual = std::abs(d.lhs - d.refinement - d.irreducible);
  return d;
}

double cohens_d(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) fail("cohens_d needs at least two samples per group");
  const double ma = mean(a);
  const double mb = mean(b);
  double ssa = 0.0, ssb = 0.0;
  for (double x : a) ssa += (x - ma) * (x - ma);
  for (double x : b) ssb += (x - mb) * (x - mb);
  const double pooled =
      std::sqrt((ssa + ssb) / static_cast<double>(a.size() + b.size() - 2));
  if (!(pooled > 0.0)) fail_numeric("cohens_d: pooled standard deviation is zero");
  return (ma - mb) / pooled;
}

double wasserstein1(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) fail("wasserstein1 of an empty sample");
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  std::vector<double> support;
  support.reserve(sa.size() + sb.size());
  std::merge(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(support));
  const double na = static_cast<double>(sa.size());
  const double nb = static_cast<double>(sb.size());
  double total = 0.0;
  std::size_t ia = 0, ib = 0;
  for (std::size_t k = 0; k + 1 < support.size(); ++k) {
    const double x = support[k];
    while (ia < sa.size() && sa[ia] <= x) ++ia;
    while (ib < sb.size() && sb[ib] <= x) ++ib;
    total += std::abs(ia / na - ib / nb) * (support[k + 1] - x);
  }
  return total;
}

double kl_divergence_hist(std::span<const double> p_samples, std::span<const double> q_samples,
                          int bins, double eps) {
  if (p_samples.empty() || q_samples.empty()) fail("kl divergence of an empty sample");
  if (bins < 2) fail("kl divergence needs at least two bins");
  auto p = histogram(p_samples, bins);
  auto q = histogram(q_samples, bins);
  const double norm = 1.0 + eps * bins;
  double kl = 0.0;
  for (int j = 0; j < bins; ++j) {
    const double pj = (p[j] + eps) / norm;
    const double qj = (q[j] + eps) / norm;
    kl += pj * std::log(pj / qj);
  }
  return std::max(kl, 0.0);
}

SeparationReport separation_report(const ConfidenceTable& table, int kl_bins, double kl_eps) {
  std::vector<double> right, wrong;
  for (const auto& e : table.entries()) (e.correct ? right : wrong).push_back(e.confidence);
  if (right.empty() || wrong.empty()) {
    fail("separation needs both correct and incorrect predictions");
  }
  SeparationReport s;
  s.cohens_d = cohens_d(right, wrong);
  s.wasserstein = wasserstein1(right, wrong);
  s.kl = kl_divergence_hist(right, wrong, kl_bins, kl_eps);
  s.aurc = aurc(table);
  s.kl_bins = kl_bins;
  s.kl_eps = kl_eps;
  return s;
}

}  // namespace selconf
