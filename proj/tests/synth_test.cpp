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

#include <gtest/gtest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <sstream>

#include "selconf/confidence.hpp"
#include "selconf/metrics.hpp"
#include "selconf/synth.hpp"

namespace selconf {
namespace {

std::string serialized(const EvalSet& s) {
  std::ostringstream os;
  serialize_records(s, os);
  return os.str();
}

SynthConfig small(uint64_t seed, int n = 2000) {
  SynthConfig c;
  c.n = n;
  c.seed = seed;
  return c;
}

TEST(Synth, ConfigValidation) {
  SynthConfig c = small(0);
  EXPECT_NO_THROW(c.validate());
  for (auto mutate : std::vector<void (*)(SynthConfig&)>{
           [](SynthConfig& x) { x.n = 0; },
           [](SynthConfig& x) { x.k_classes = 1; },
           [](SynthConfig& x) { x.tau = -0.1; },
           [](SynthConfig& x) { x.logit_noise = -1.0; },
           [](SynthConfig& x) { x.mc_passes = -1; },
           [](SynthConfig& x) { x.feat_dim = x.k_classes; },
       }) {
    SynthConfig bad = c;
    mutate(bad);
    EXPECT_THROW(generate(bad), Error);
  }
}

TEST(Synth, SameSeedIsByteIdentical) {
  const auto a = generate(small(3));
  const auto b = generate(small(3));
  EXPECT_EQ(serialized(a.set), serialized(b.set));
  EXPECT_EQ(a.s_star, b.s_star);
  EXPECT_NE(serialized(a.set), serialized(generate(small(4)).set));
}

TEST(Synth, ShapeAndRoundTrip) {
  SynthConfig c = small(5, 500);
  c.k_classes = 42;
  c.feat_dim = 64;
  const auto data = generate(c);
  ASSERT_EQ(data.set.size(), 500u);
  ASSERT_EQ(data.s_star.size(), 500u);
  EXPECT_EQ(data.set.k_classes(), 42);
  for (const auto& r : data.set.records()) {
    EXPECT_EQ(r.features.size(), 64);
    EXPECT_EQ(r.mc_passes.size(), 10u);
  }
  for (double s : data.s_star) {
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 1.0);
  }
  std::istringstream in(serialized(data.set));
  EXPECT_TRUE(parse_records(in) == data.set);
}

TEST(Synth, PosteriorSideFileRoundTrip) {
  const auto data = generate(small(6, 300));
  const auto path = (std::filesystem::temp_directory_path() / "selconf_sstar_test.csv").string();
  write_posterior_csv(data, path);
  const auto back = read_posterior_csv(path);
  std::remove(path.c_str());
  const auto want = data.posterior_table();
  ASSERT_EQ(back.size(), want.size());
  for (const auto& [id, s] : want) EXPECT_DOUBLE_EQ(back.at(id), s);
}

TEST(Synth, AccuracyFallsWithDifficulty) {
  // Feature K carries a noisy copy of the difficulty; noise 0 exposes it.
  SynthConfig c = small(7, 20000);
  c.difficulty_feature_noise = 0.0;
  const auto data = generate(c);
  const int k = c.k_classes;
  std::vector<std::size_t> order(data.set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto& recs = data.set.records();
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return recs[a].features[k] < recs[b].features[k]; });
  std::vector<double> acc;
  const std::size_t q = order.size() / 4;
  for (int b = 0; b < 4; ++b) {
    double hits = 0;
    for (std::size_t i = b * q; i < (b + 1) * q; ++i) hits += correctness(recs[order[i]]);
    acc.push_back(hits / static_cast<double>(q));
  }
  for (int b = 1; b < 4; ++b) EXPECT_LE(acc[b], acc[b - 1]) << "quartile " << b;
  EXPECT_GT(acc.front() - acc.back(), 0.3);
}

TEST(Synth, McdEqualsMspWithoutPassNoise) {
  SynthConfig c = small(8, 1000);
  c.mc_noise = 0.0;
  const auto data = generate(c);
  const auto m = msp_table(data.set);
  const auto d = mcd_table(data.set);
  for (std::size_t i = 0; i < m.size(); ++i) {
    EXPECT_NEAR(m.entries()[i].confidence, d.entries()[i].confidence, 1e-12);
  }
}

TEST(Synth, CalibratedRegime) {
  SynthConfig c = small(9, 20000);
  c.tau = 0.0;
  c.logit_noise = 0.0;
  const auto data = generate(c);
  for (const auto& r : data.set.records()) {
    EXPECT_EQ(r.logits, r.features.head(c.k_classes));
  }
  const auto msp = msp_table(data.set);
  EXPECT_DOUBLE_EQ(bayes_gap(msp, data.posterior_table()).mse_to_bayes, 0.0);
  EXPECT_LT(ece(msp), 0.02);
  const auto star = table_from_scores(data.set, data.s_star, "s*");
  EXPECT_NEAR(aurc(msp), aurc(star), 0.01);
}

TEST(Synth, DefaultsAreOverconfident) {
  const auto data = generate(small(10, 20000));
  const auto msp = msp_table(data.set);
  EXPECT_GT(ece(msp), 0.05);
  double conf = 0.0;
  for (const auto& e : msp.entries()) conf += e.confidence;
  EXPECT_GT(conf / static_cast<double>(msp.size()), msp.accuracy());
  EXPECT_GT(bayes_gap(msp, data.posterior_table()).mse_to_bayes, 0.01);
}

TEST(BayesGapTest, ExamplesAndErrors) {
  const auto data = generate(small(11, 200));
  const auto star = table_from_scores(data.set, data.s_star, "s*");
  const auto g = bayes_gap(star, data.posterior_table());
  EXPECT_DOUBLE_EQ(g.mse_to_bayes, 0.0);
  EXPECT_DOUBLE_EQ(g.mean_abs, 0.0);
  EXPECT_THROW(bayes_gap(star, {{"nope", 0.5}}), Error);
}

}  // namespace
}  // namespace selconf
