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

// Shared fixtures and slow reference implementations used as oracles.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "selconf/dataset.hpp"
#include "selconf/neural.hpp"

namespace selconf::testing {

inline ConfidenceTable make_table(const std::vector<double>& conf, const std::vector<bool>& correct,
                                  const std::string& name = "t") {
  std::vector<ConfidenceEntry> e;
  for (std::size_t i = 0; i < conf.size(); ++i) {
    e.push_back({"r" + std::to_string(i), conf[i], correct[i]});
  }
  return ConfidenceTable(std::move(e), name);
}

inline ScoredRecord make_record(const std::string& id, std::vector<double> logits,
                                std::vector<double> features, int label) {
  ScoredRecord r;
  r.id = id;
  r.logits = Eigen::Map<Vecd>(logits.data(), static_cast<Eigen::Index>(logits.size()));
  r.features = Eigen::Map<Vecd>(features.data(), static_cast<Eigen::Index>(features.size()));
  r.label = label;
  return r;
}

// Random record set with integer-ish confidences so ties are common.
inline EvalSet random_set(int n, int k, int d, uint64_t seed, int mc_passes = 0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.5);
  std::uniform_int_distribution<int> cls(0, k - 1);
  std::vector<ScoredRecord> recs;
  for (int i = 0; i < n; ++i) {
    ScoredRecord r;
    r.id = "x" + std::to_string(i);
    r.logits = Vecd::NullaryExpr(k, [&] { return g(rng); });
    r.features = Vecd::NullaryExpr(d, [&] { return g(rng); });
    r.label = cls(rng);
    for (int p = 0; p < mc_passes; ++p) {
      r.mc_passes.push_back(r.logits + Vecd::NullaryExpr(k, [&] { return 0.3 * g(rng); }));
    }
    recs.push_back(std::move(r));
  }
  return EvalSet(std::move(recs), k, d);
}

// Operating points by direct enumeration: one threshold at each distinct
// confidence plus one below everything. Each point is (coverage, risk).
struct BrutePoint {
  double gamma;
  double coverage;
  std::optional<double> risk;
};

inline std::vector<BrutePoint> brute_points(const std::vector<double>& conf,
                                            const std::vector<bool>& correct) {
  std::vector<double> gammas = conf;
  gammas.push_back(-std::numeric_limits<double>::infinity());
  std::sort(gammas.begin(), gammas.end());
  gammas.erase(std::unique(gammas.begin(), gammas.end()), gammas.end());
  std::vector<BrutePoint> out;
  const double n = static_cast<double>(conf.size());
  for (double g : gammas) {
    int acc = 0;
    int wrong = 0;
    for (std::size_t i = 0; i < conf.size(); ++i) {
      if (conf[i] > g) {
        ++acc;
        if (!correct[i]) ++wrong;
      }
    }
    BrutePoint p{g, acc / n, std::nullopt};
    if (acc > 0) p.risk = static_cast<double>(wrong) / acc;
    out.push_back(p);
  }
  return out;
}

// Area under the enumerated curve, integrating coverage from 0 upward.
inline double brute_aurc(const std::vector<double>& conf, const std::vector<bool>& correct) {
  auto pts = brute_points(conf, correct);
  std::sort(pts.begin(), pts.end(),
            [](const BrutePoint& a, const BrutePoint& b) { return a.coverage < b.coverage; });
  double area = 0.0;
  double prev = 0.0;
  for (const auto& p : pts) {
    if (!p.risk) continue;
    area += *p.risk * (p.coverage - prev);
    prev = p.coverage;
  }
  return area;
}

inline double brute_c_at_r(const std::vector<double>& conf, const std::vector<bool>& correct,
                           double r) {
  double best = 0.0;
  for (const auto& p : brute_points(conf, correct)) {
    if (p.risk && *p.risk <= r) best = std::max(best, p.coverage);
  }
  return best;
}

// Straight-line forward pass written independently of the batched code.
inline double reference_forward(const MlpParams& p, const Vecd& x) {
  Vecd a = x;
  for (int l = 0; l < p.depth(); ++l) {
    Vecd z(p.weights[l].rows());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      double s = p.biases[l][i];
      for (Eigen::Index j = 0; j < a.size(); ++j) s += p.weights[l](i, j) * a[j];
      z[i] = s;
    }
    if (l + 1 < p.depth()) {
      for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = z[i] > 0.0 ? z[i] : 0.0;
    }
    a = z;
  }
  return 1.0 / (1.0 + std::exp(-a[0]));
}

}  // namespace selconf::testing
