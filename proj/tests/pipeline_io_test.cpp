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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "selconf/pipeline.hpp"
#include "test_support.hpp"

namespace selconf {
namespace {

TEST(Json, VsRoundTrip) {
  VsParams p{(Vecd(3) << 1.5, 0.25, 2.0).finished(), (Vecd(3) << -0.1, 0.0, 3.5).finished()};
  const auto back = vs_params_from_json(to_json(p));
  EXPECT_EQ(back.diag_w, p.diag_w);
  EXPECT_EQ(back.bias, p.bias);
  EXPECT_THROW(vs_params_from_json(json{{"diag_w", {1.0}}, {"bias", {0.0, 1.0}}}), Error);
}

TEST(Json, MlpRoundTripIsExact) {
  std::mt19937_64 rng(3);
  const MlpParams p = mlp_init(7, 5, 3, rng);
  EXPECT_TRUE(mlp_from_json(to_json(p)) == p);
  // Text round trip keeps every bit too.
  EXPECT_TRUE(mlp_from_json(json::parse(to_json(p).dump())) == p);
}

TEST(Json, TrainConfigRoundTrip) {
  TrainConfig c;
  c.learning_rate = 3e-4;
  c.batch_size = 17;
  c.epochs = 4;
  c.dropout_p = 0.25;
  c.seed = 99;
  c.early_stop = EarlyStop::kNone;
  const auto back = train_config_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
}

TEST(Json, HeadsRoundTripKeepsScores) {
  const EvalSet s = testing::random_set(60, 3, 4, 2);
  const EvalSet v = testing::random_set(30, 3, 4, 3);
  TrainConfig c;
  c.epochs = 2;
  for (auto mode : {AcrMode::kFull, AcrMode::kNoRrh, AcrMode::kFixedAlpha}) {
    AcrTrainOptions o;
    o.mode = mode;
    o.fixed_alpha = 0.3;
    const AcrHeads h = acr_train(s, v, c, o).heads;
    const AcrHeads back = acr_heads_from_json(json::parse(to_json(h).dump()));
    EXPECT_EQ(back.method_name(), h.method_name());
    EXPECT_EQ(back.input_mean, h.input_mean);
    EXPECT_EQ(back.input_scale, h.input_scale);
    EXPECT_EQ(acr_table(back, v).confidences(), acr_table(h, v).confidences());
  }
}

TEST(Json, HeadsRejectBadStandardizer) {
  AcrHeads h = acr_init({InputBlock::kFeatures, InputBlock::kLogits}, 3, 2, 0);
  h.input_mean = Vecd::Zero(5);
  h.input_scale = Vecd::Ones(5);
  json j = to_json(h);
  j["input_scale"][2] = 0.0;
  EXPECT_THROW(acr_heads_from_json(j), Error);
  j = to_json(h);
  j["input_mean"] = {0.0};
  EXPECT_THROW(acr_heads_from_json(j), Error);
}

TEST(Csv, CurveRoundTripAndEvalReproducible) {
  const EvalSet s = testing::random_set(200, 4, 1, 6);
  const auto table = msp_table(s);
  std::stringstream buf;
  write_curve_csv(rc_curve(table), buf);
  EXPECT_EQ(buf.str().rfind("gamma,coverage,risk\n", 0), 0u);
  EXPECT_NE(buf.str().find("\n-inf,1,"), std::string::npos);
  const RcCurve back = read_curve_csv(buf);
  const RcCurve want = rc_curve(table);
  ASSERT_EQ(back.points.size(), want.points.size());
  EXPECT_EQ(aurc(back), aurc(want));
  const auto rep = evaluate(table);
  for (double r : kDefaultRisks) EXPECT_EQ(c_at_r(back, r).coverage, rep.c_at_r.at(r));
}

TEST(Csv, ReportLayout) {
  const auto rep = evaluate(testing::make_table({0.9, 0.8, 0.3}, {true, false, true}, "msp"));
  std::ostringstream full, human;
  write_report_csv(std::span(&rep, 1), kDefaultRisks, full);
  write_report_csv(std::span(&rep, 1), kDefaultRisks, human, 2);
  EXPECT_EQ(full.str().substr(0, full.str().find('\n')), "method,c@1,c@5,c@10,c@20,aurc,ece,accuracy,n");
  EXPECT_NE(human.str().find("msp,33.33,33.33,33.33,33.33,"), std::string::npos) << human.str();
  EXPECT_NE(human.str().find(",66.67,3\n"), std::string::npos);
}

TEST(Lists, ParseRisksAndMethods) {
  EXPECT_EQ(parse_risks("0.01,0.05"), (std::vector<double>{0.01, 0.05}));
  EXPECT_THROW(parse_risks("0.01,abc"), Error);
  EXPECT_THROW(parse_risks("0.05x"), Error);
  EXPECT_THROW(parse_risks("1.5"), Error);
  EXPECT_EQ(split_list("msp, acr"), (std::vector<std::string>{"msp", "acr"}));
  EXPECT_THROW(method_table("bogus", testing::random_set(2, 2, 1, 0), {}), Error);
  EXPECT_THROW(method_table("acr", testing::random_set(2, 2, 1, 0), {}), Error);
}

TEST(Staged, TagsStageAndKeepsKind) {
  try {
    staged("split", [] { return split_eval(testing::random_set(3, 2, 1, 0), 1.5, 0); });
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kValidation);
    EXPECT_EQ(std::string(e.what()).rfind("split: ", 0), 0u);
  }
}

TEST(Verify, ReportFields) {
  const auto m = testing::make_table({0.9, 0.8, 0.3, 0.6}, {true, false, true, false}, "msp");
  const auto r = testing::make_table({0.7, 0.2, 0.6, 0.4}, {true, false, true, false}, "rrh");
  const json j = verify_report(m, r);
  EXPECT_NEAR(j["moments"]["sigma2_m"].get<double>(), error_moments(m, r).sigma2_m, 1e-15);
  EXPECT_TRUE(j.contains("fusion_condition"));
  EXPECT_TRUE(j.contains("best_fixed_lambda"));
  EXPECT_EQ(j["separation"].size(), 2u);
}

class SmallPipeline : public ::testing::Test {
 protected:
  static PipelineConfig config() {
    PipelineConfig c;
    c.synth.n = 3000;
    c.train.epochs = 3;
    return c;
  }
};

TEST_F(SmallPipeline, RunsAndIsDeterministic) {
  const std::vector<uint64_t> seeds{0, 1};
  const auto a = run_pipeline(config(), seeds, 2);
  const auto b = run_pipeline(config(), seeds, 1);
  ASSERT_EQ(a.runs.size(), 2u);
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
  EXPECT_EQ(a.runs[0].n_val_f, 600u);
  EXPECT_EQ(a.runs[0].n_val_g, 240u);
  EXPECT_EQ(a.runs[0].n_test, 360u);
  EXPECT_EQ(a.runs[0].reports.back().method_name, "oracle");
  EXPECT_TRUE(a.aggregate.count("acr"));
  for (const auto& run : a.runs) {
    const double oracle = run.report("oracle").aurc;
    for (const auto& rep : run.reports) EXPECT_LE(oracle, rep.aurc + 1e-15) << rep.method_name;
  }
}

TEST_F(SmallPipeline, StageErrorsAreTagged) {
  PipelineConfig c = config();
  c.synth.k_classes = 1;
  try {
    run_seed(c, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(std::string(e.what()).rfind("synth: ", 0), 0u) << e.what();
  }
}

TEST(Manifest, AppendsOneLinePerCall) {
  const auto path = std::filesystem::temp_directory_path() / "selconf_manifest_test.jsonl";
  std::filesystem::remove(path);
  RunManifest m;
  m.command = "eval";
  m.outputs = {"x.csv"};
  m.append_to(path.string());
  m.append_to(path.string());
  std::ifstream in(path);
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) {
    const json j = json::parse(line);
    EXPECT_EQ(j["command"], "eval");
    EXPECT_EQ(j["version"], kVersion);
    ++lines;
  }
  EXPECT_EQ(lines, 2);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace selconf
