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

#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "selconf/acr.hpp"
#include "selconf/analysis.hpp"
#include "selconf/io.hpp"
#include "selconf/metrics.hpp"
#include "selconf/synth.hpp"

namespace selconf {

/// Runs `body`, prefixing any Error with the stage name.
template <typename F>
auto staged(const std::string& stage, F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    throw Error(e.kind(), stage + ": " + e.what());
  }
}

/// Inputs for building a method's confidence table.
struct MethodInputs {
  const VsParams* vs = nullptr;
  const AcrHeads* heads = nullptr;
};

/// One of msp, doctor, mcd, vs, acr, oracle.
ConfidenceTable method_table(const std::string& method, const EvalSet& set,
                             const MethodInputs& inputs);

std::vector<std::string> split_list(const std::string& csv);
std::vector<double> parse_risks(const std::string& csv);

/// CSV rows `method,c@1,...,aurc,ece,accuracy,n`; metrics in percent,
/// full precision unless `decimals` is set.
void write_report_csv(std::span<const MetricsReport> reports, std::span<const double> risks,
                      std::ostream& out, std::optional<int> decimals = {});
/// `gamma,coverage,risk` rows.
void write_curve_csv(const RcCurve& curve, std::ostream& out);
RcCurve read_curve_csv(std::istream& in);

/// Moments, optimal fixed weight, fusion condition, J at the endpoints and
/// at the optimum, plus separation rows.
json verify_report(const ConfidenceTable& msp, const ConfidenceTable& rrh,
                   const ConfidenceTable* acr = nullptr,
                   const PosteriorTable* posterior = nullptr);

struct PipelineConfig {
  SynthConfig synth;
  TrainConfig train;
  AcrTrainOptions acr;
  std::vector<std::string> methods{"msp", "doctor", "mcd", "vs", "acr"};
  std::vector<double> risks = kDefaultRisks;
  int bins = kDefaultEceBins;
};

struct SeedRun {
  uint64_t seed = 0;
  std::vector<MetricsReport> reports;  // requested methods, then oracle
  ErrorMoments moments;
  FusionCondition condition{};
  std::optional<double> alpha_star;
  AlphaStats alpha{};
  FixedLambdaResult fixed_lambda{};
  BayesGap gap_msp{};
  BayesGap gap_acr{};
  int best_epoch = 0;
  std::size_t n_val_f = 0;
  std::size_t n_val_g = 0;
  std::size_t n_test = 0;
  VsParams vs;
  AcrHeads heads;

  const MetricsReport& report(const std::string& method) const;
};

/// synth -> protocol split -> vector scaling and ACR on Val-f (early stop on
/// Val-g) -> metrics on Test.
SeedRun run_seed(const PipelineConfig& config, uint64_t seed);

struct PipelineResult {
  std::vector<SeedRun> runs;
  /// method -> metric -> mean/std (only with two or more seeds).
  std::map<std::string, std::map<std::string, MeanStd>> aggregate;
};

/// Seeds run concurrently, at most `max_threads` at a time.
PipelineResult run_pipeline(const PipelineConfig& config, std::span<const uint64_t> seeds,
                            int max_threads = 1);

/// Concurrency cap from SELCONF_THREADS, defaulting to the hardware count.
int thread_cap_from_env();

json to_json(const SeedRun& run);
json to_json(const PipelineResult& result);

inline constexpr const char* kVersion = "0.1.0";

/// Provenance written next to every output; appended as one JSON line.
struct RunManifest {
  std::string command;
  json config;
  std::vector<uint64_t> seeds;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::string version = kVersion;
  double wall_clock_seconds = 0.0;

  json to_json() const;
  void append_to(const std::string& path) const;
};

}  // namespace selconf
