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

// Synthetic frozen classifier with a known generative posterior.
//
// Per record: difficulty u ~ U(0,1), true class uniform over K, true logits
// z* = margin_max (1 - u) e_y* + N(0, class_noise^2), label drawn from
// softmax(z*), and model logits z = (1 + tau u) z* + N(0, logit_noise^2).
// Inflating hard items makes the softmax peak overconfident exactly where
// accuracy is low. Features carry z*, a noisy copy of u, and standard-normal
// distractors. The probability of correctness given the realized logits is
// s* = softmax(z*)[argmax z].

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "selconf/dataset.hpp"

namespace selconf {

struct SynthConfig {
  int n = 20000;
  int k_classes = 8;
  int feat_dim = 32;
  double margin_max = 4.0;
  double class_noise = 0.5;
  double tau = 1.5;
  double logit_noise = 0.3;
  double difficulty_feature_noise = 0.1;
  int mc_passes = 10;
  double mc_noise = 0.3;
  uint64_t seed = 0;

  void validate() const;
};

using PosteriorTable = std::unordered_map<std::string, double>;

struct SynthData {
  EvalSet set;
  /// s* per record, in record order.
  std::vector<double> s_star;

  PosteriorTable posterior_table() const;
};

SynthData generate(const SynthConfig& config);

struct BayesGap {
  double mse_to_bayes;  // E[(s - s*)^2]
  double mean_abs;      // E|s - s*|
};

BayesGap bayes_gap(const ConfidenceTable& table, const PosteriorTable& s_star);

/// `id,s_star` CSV side file.
void write_posterior_csv(const SynthData& data, const std::string& path);
PosteriorTable read_posterior_csv(const std::string& path);

}  // namespace selconf
