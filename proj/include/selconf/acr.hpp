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

// Adaptive confidence refinement: a residual risk head C_R(x) and a gating
// head alpha(x), both sigmoid perceptrons over the fused representation and
// the logits, combined with the softmax peak C_M(x) as
//
//   C(x) = alpha(x) * C_M(x) + (1 - alpha(x)) * C_R(x).
//
// Training minimizes BCE of C(x) against the correctness bit, with gradients
// reaching the residual head through (1 - alpha) and the gate through
// (C_M - C_R).

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "selconf/dataset.hpp"
#include "selconf/neural.hpp"

namespace selconf {

enum class InputBlock { kFeatures, kLogits };

std::string_view to_string(InputBlock block);
/// Parses "features,logits" style lists.
std::vector<InputBlock> parse_input_spec(std::string_view spec);

/// Ablation modes. kNoRrh anchors the residual term at 0.5 so the gate still
/// has something to trade against; kNoCgh pins alpha at 0; kFixedAlpha uses
/// a constant alpha and trains only the residual head.
enum class AcrMode { kFull, kNoRrh, kNoCgh, kFixedAlpha };

std::string_view to_string(AcrMode mode);
AcrMode acr_mode_from_string(std::string_view name);

struct AcrHeads {
  MlpParams rrh;
  MlpParams cgh;
  std::vector<InputBlock> input_spec{InputBlock::kFeatures, InputBlock::kLogits};
  AcrMode mode = AcrMode::kFull;
  double fixed_alpha = 0.5;  // used by kFixedAlpha only
  // Per-column standardization applied before both heads; empty means none.
  Vecd input_mean;
  Vecd input_scale;

  std::string method_name() const;
  /// Standardizes head inputs in place (one record per column).
  void normalize(Matd& x) const;
};

/// Width of the concatenated head input for the given blocks.
int input_width(const std::vector<InputBlock>& spec, int k_classes, int feat_dim);
Vecd head_input(const std::vector<InputBlock>& spec, const ScoredRecord& record);
/// Head inputs of a whole set, one record per column.
Matd head_inputs(const std::vector<InputBlock>& spec, const EvalSet& set);

/// Column mean and standard deviation of `x` (one record per column);
/// constant columns get scale 1.
std::pair<Vecd, Vecd> fit_standardizer(const Matd& x);

/// Seeded initialization; hidden width defaults to the input width.
AcrHeads acr_init(const std::vector<InputBlock>& spec, int k_classes, int feat_dim,
                  uint64_t seed, int depth = 3, std::optional<int> d_hidden = {},
                  AcrMode mode = AcrMode::kFull);

struct AcrOutput {
  double c_acr;
  double alpha;
  double c_r;
  double c_m;
};

AcrOutput acr_confidence(const AcrHeads& heads, const ScoredRecord& record);
std::vector<AcrOutput> acr_outputs(const AcrHeads& heads, const EvalSet& set);

struct AcrTrainOptions {
  std::vector<InputBlock> input_spec{InputBlock::kFeatures, InputBlock::kLogits};
  AcrMode mode = AcrMode::kFull;
  double fixed_alpha = 0.5;
  int depth = 3;
  std::optional<int> d_hidden;
  bool standardize = true;
};

struct AcrTrainResult {
  AcrHeads heads;
  std::vector<double> epoch_loss;
  std::vector<double> val_aurc;
  int best_epoch = 0;
};

/// Joint minibatch training of both heads on `train` (Val-f role), with
/// early stopping on AURC of the fused confidence over `val` (Val-g role).
AcrTrainResult acr_train(const EvalSet& train, const EvalSet& val, const TrainConfig& config,
                         const AcrTrainOptions& options = {});

ConfidenceTable acr_table(const AcrHeads& heads, const EvalSet& set);
/// Residual head output C_R(x) alone, as a table named "rrh".
ConfidenceTable rrh_table(const AcrHeads& heads, const EvalSet& set);

struct AlphaStats {
  double mean;
  double variance;
  double frac_below_001;
  double frac_above_099;
  std::array<double, 20> histogram;  // fractions over 20 equal bins of [0,1]
};

AlphaStats alpha_stats(const AcrHeads& heads, const EvalSet& set);

struct FusionGradient {
  double d_alpha;
  double d_residual;
  double d_fused;
};

/// Chain rule through BCE(alpha*c_m + (1-alpha)*c_r, target); this is the
/// path the trainer uses.
FusionGradient fusion_gradient(double c_m, double c_r, double alpha, double target);

/// dL/dalpha written out as (c_m - c_r)(C - c) / (C (1 - C)).
double alpha_gradient_identity(double c_m, double c_r, double alpha, double target);

/// Largest |trainer gradient - identity| over the batch.
double bce_alpha_gradient_check(const AcrHeads& heads, const EvalSet& batch);

}  // namespace selconf
