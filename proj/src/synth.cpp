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

#include "selconf/synth.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>

#include "selconf/confidence.hpp"

namespace selconf {

void SynthConfig::validate() const {
  if (n < 1) fail("synth: n must be at least 1");
  if (k_classes < 2) fail("synth: k_classes must be at least 2");
  if (feat_dim < k_classes + 1) fail("synth: feat_dim must be at least k_classes + 1");
  if (margin_max < 0 || class_noise < 0 || tau < 0 || logit_noise < 0 ||
      difficulty_feature_noise < 0 || mc_noise < 0 || mc_passes < 0) {
    fail("synth: scale and noise parameters must be non-negative");
  }
}

PosteriorTable SynthData::posterior_table() const {
  PosteriorTable out;
  out.reserve(s_star.size());
  for (std::size_t i = 0; i < s_star.size(); ++i) out.emplace(set.records()[i].id, s_star[i]);
  return out;
}

namespace {

// Independent stream per record so generation can be sharded by index.
std::mt19937_64 record_rng(uint64_t seed, uint64_t index) {
  std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32),
                    static_cast<uint32_t>(index), static_cast<uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

std::string record_id(uint64_t seed, int i) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "s%llu-%07d", static_cast<unsigned long long>(seed), i);
  return buf;
}

}  // namespace

SynthData generate(const SynthConfig& cfg) {
  cfg.validate();
  const int k = cfg.k_classes;
  std::vector<ScoredRecord> records;
  records.reserve(cfg.n);
  std::vector<double> s_star;
  s_star.reserve(cfg.n);

  for (int i = 0; i < cfg.n; ++i) {
    auto rng = record_rng(cfg.seed, static_cast<uint64_t>(i));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_int_distribution<int> any_class(0, k - 1);

    const double u = unit(rng);
    const int true_class = any_class(rng);
    Vecd z_true(k);
    for (int c = 0; c < k; ++c) {
      z_true[c] = (c == true_class ? cfg.margin_max * (1.0 - u) : 0.0) +
                  cfg.class_noise * normal(rng);
    }
    const Vecd posterior = softmax(z_true);
    std::discrete_distribution<int> draw_label(posterior.data(), posterior.data() + k);
    const int label = draw_label(rng);

    Vecd z = (1.0 + cfg.tau * u) * z_true;
    for (int c = 0; c < k; ++c) z[c] += cfg.logit_noise * normal(rng);

    Vecd features(cfg.feat_dim);
    features.head(k) = z_true;
    features[k] = u + cfg.difficulty_feature_noise * normal(rng);
    for (int j = k + 1; j < cfg.feat_dim; ++j) features[j] = normal(rng);

    ScoredRecord r;
    r.id = record_id(cfg.seed, i);
    r.label = label;
    r.logits = z;
    r.features = std::move(features);
    for (int p = 0; p < cfg.mc_passes; ++p) {
      Vecd pass = z;
      for (int c = 0; c < k; ++c) pass[c] += cfg.mc_noise * normal(rng);
      r.mc_passes.push_back(std::move(pass));
    }
    s_star.push_back(posterior[predicted_class(z)]);
    records.push_back(std::move(r));
  }

  std::ostringstream prov;
  prov << "synth(seed=" << cfg.seed << ",n=" << cfg.n << ",k=" << cfg.k_classes
       << ",d=" << cfg.feat_dim << ",tau=" << cfg.tau << ")";
  return {EvalSet(std::move(records), k, cfg.feat_dim, Split::kTest, prov.str()),
          std::move(s_star)};
}

BayesGap bayes_gap(const ConfidenceTable& table, const PosteriorTable& s_star) {
  if (table.empty()) fail("empty confidence table");
  BayesGap gap{0.0, 0.0};
  const double n = static_cast<double>(table.size());
  for (const auto& e : table.entries()) {
    const auto it = s_star.find(e.id);
    if (it == s_star.end()) fail("no true posterior for '" + e.id + "'");
    const double d = e.confidence - it->second;
    gap.mse_to_bayes += d * d / n;
    gap.mean_abs += std::abs(d) / n;
  }
  return gap;
}

void write_posterior_csv(const SynthData& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail("cannot write '" + path + "'");
  out << "id,s_star\n" << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t i = 0; i < data.s_star.size(); ++i) {
    out << data.set.records()[i].id << ',' << data.s_star[i] << '\n';
  }
}

PosteriorTable read_posterior_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open '" + path + "'");
  PosteriorTable out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 || line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) fail(path + ": line " + std::to_string(line_no) + " malformed");
    try {
      out[line.substr(0, comma)] = std::stod(line.substr(comma + 1));
    } catch (const std::exception&) {
      fail(path + ": line " + std::to_string(line_no) + " has a malformed value");
    }
  }
  return out;
}

}  // namespace selconf
