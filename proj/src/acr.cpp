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

#include "selconf/acr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <tuple>

#include "selconf/confidence.hpp"
#include "selconf/metrics.hpp"

namespace selconf {

std::string_view to_string(InputBlock block) {
  return block == InputBlock::kFeatures ? "features" : "logits";
}

std::vector<InputBlock> parse_input_spec(std::string_view spec) {
  std::vector<InputBlock> out;
  std::size_t pos = 0;
  while (pos <= spec.size()) {
    const auto comma = spec.find(',', pos);
    const auto token = spec.substr(pos, comma == std::string_view::npos ? spec.npos : comma - pos);
    if (token == "features") {
      out.push_back(InputBlock::kFeatures);
    } else if (token == "logits") {
      out.push_back(InputBlock::kLogits);
    } else {
      fail("unknown input block '" + std::string(token) + "'");
    }
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

std::string_view to_string(AcrMode mode) {
  switch (mode) {
    case AcrMode::kFull: return "full";
    case AcrMode::kNoRrh: return "no_rrh";
    case AcrMode::kNoCgh: return "no_cgh";
    case AcrMode::kFixedAlpha: return "fixed_alpha";
  }
  return "full";
}

AcrMode acr_mode_from_string(std::string_view name) {
  if (name == "full") return AcrMode::kFull;
  if (name == "no_rrh") return AcrMode::kNoRrh;
  if (name == "no_cgh") return AcrMode::kNoCgh;
  if (name == "fixed_alpha") return AcrMode::kFixedAlpha;
  fail("unknown ACR mode '" + std::string(name) + "'");
}

std::string AcrHeads::method_name() const {
  return mode == AcrMode::kFull ? "acr" : "acr-" + std::string(to_string(mode));
}

void AcrHeads::normalize(Matd& x) const {
  if (input_mean.size() == 0) return;
  if (input_mean.size() != x.rows() || input_scale.size() != x.rows()) {
    fail("standardizer width does not match the head input");
  }
  x = ((x.colwise() - input_mean).array().colwise() / input_scale.array()).matrix();
}

std::pair<Vecd, Vecd> fit_standardizer(const Matd& x) {
  if (x.cols() == 0) fail("cannot fit a standardizer on an empty set");
  const Vecd mean = x.rowwise().mean();
  Vecd scale = ((x.colwise() - mean).array().square().rowwise().mean()).sqrt().matrix();
  for (Eigen::Index i = 0; i < scale.size(); ++i) {
    if (!(scale[i] > 1e-12)) scale[i] = 1.0;
  }
  return {mean, scale};
}

int input_width(const std::vector<InputBlock>& spec, int k_classes, int feat_dim) {
  if (spec.empty()) fail("input spec must name at least one block");
  int width = 0;
  for (auto b : spec) width += b == InputBlock::kFeatures ? feat_dim : k_classes;
  return width;
}

Vecd head_input(const std::vector<InputBlock>& spec, const ScoredRecord& record) {
  if (spec.empty()) fail("input spec must name at least one block");
  Eigen::Index width = 0;
  for (auto b : spec) {
    width += b == InputBlock::kFeatures ? record.features.size() : record.logits.size();
  }
  Vecd x(width);
  Eigen::Index at = 0;
  for (auto b : spec) {
    const Vecd& block = b == InputBlock::kFeatures ? record.features : record.logits;
    x.segment(at, block.size()) = block;
    at += block.size();
  }
  return x;
}

Matd head_inputs(const std::vector<InputBlock>& spec, const EvalSet& set) {
  const int width = input_width(spec, set.k_classes(), set.feat_dim());
  Matd x(width, static_cast<Eigen::Index>(set.size()));
  for (std::size_t i = 0; i < set.size(); ++i) {
    x.col(static_cast<Eigen::Index>(i)) = head_input(spec, set.records()[i]);
  }
  return x;
}

AcrHeads acr_init(const std::vector<InputBlock>& spec, int k_classes, int feat_dim,
                  uint64_t seed, int depth, std::optional<int> d_hidden, AcrMode mode) {
  const int d_in = input_width(spec, k_classes, feat_dim);
  std::mt19937_64 rng(seed);
  AcrHeads heads;
  heads.input_spec = spec;
  heads.mode = mode;
  heads.rrh = mlp_init(d_in, d_hidden.value_or(d_in), depth, rng);
  heads.cgh = mlp_init(d_in, d_hidden.value_or(d_in), depth, rng);
  return heads;
}

namespace {

struct Fused {
  Vecd c_r;
  Vecd alpha;
  Vecd c;
};

// Applies the mode's fusion rule to head outputs.
Fused fuse(const AcrHeads& heads, const Vecd& c_m, const Vecd& rrh_out, const Vecd& cgh_out) {
  Fused f;
  switch (heads.mode) {
    case AcrMode::kFull:
      f.c_r = rrh_out;
      f.alpha = cgh_out;
      break;
    case AcrMode::kNoRrh:
      f.c_r = Vecd::Constant(c_m.size(), 0.5);
      f.alpha = cgh_out;
      break;
    case AcrMode::kNoCgh:
      f.c_r = rrh_out;
      f.alpha = Vecd::Zero(c_m.size());
      break;
    case AcrMode::kFixedAlpha:
      f.c_r = rrh_out;
      f.alpha = Vecd::Constant(c_m.size(), heads.fixed_alpha);
      break;
  }
  f.c = (f.alpha.array() * c_m.array() + (1.0 - f.alpha.array()) * f.c_r.array()).matrix();
  return f;
}

bool uses_rrh(AcrMode mode) { return mode != AcrMode::kNoRrh; }
bool uses_cgh(AcrMode mode) { return mode == AcrMode::kFull || mode == AcrMode::kNoRrh; }

void check_dims(const AcrHeads& heads, const EvalSet& set) {
  const int d_in = input_width(heads.input_spec, set.k_classes(), set.feat_dim());
  if (heads.rrh.d_in() != d_in || heads.cgh.d_in() != d_in) {
    fail("head input width " + std::to_string(heads.rrh.d_in()) +
         " does not match the data (" + std::to_string(d_in) + ")");
  }
}

Vecd msp_column(const EvalSet& set) {
  Vecd c_m(static_cast<Eigen::Index>(set.size()));
  for (std::size_t i = 0; i < set.size(); ++i) {
    c_m[static_cast<Eigen::Index>(i)] = msp(set.records()[i].logits);
  }
  return c_m;
}

std::vector<AcrOutput> outputs_for(const AcrHeads& heads, const Matd& x, const Vecd& c_m) {
  const Fused f = fuse(heads, c_m, mlp_predict(heads.rrh, x), mlp_predict(heads.cgh, x));
  std::vector<AcrOutput> out(static_cast<std::size_t>(c_m.size()));
  for (Eigen::Index i = 0; i < c_m.size(); ++i) {
    out[static_cast<std::size_t>(i)] = {std::clamp(f.c[i], 0.0, 1.0), f.alpha[i], f.c_r[i],
                                        c_m[i]};
  }
  return out;
}

Matd gather(const Matd& x, std::span<const std::size_t> idx) {
  Matd out(x.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) {
    out.col(static_cast<Eigen::Index>(j)) = x.col(static_cast<Eigen::Index>(idx[j]));
  }
  return out;
}

double fused_aurc(const AcrHeads& heads, const Matd& x, const Vecd& c_m,
                  const std::vector<bool>& correct) {
  const auto outs = outputs_for(heads, x, c_m);
  std::vector<ConfidenceEntry> entries;
  entries.reserve(outs.size());
  for (std::size_t i = 0; i < outs.size(); ++i) {
    entries.push_back({std::to_string(i), outs[i].c_acr, correct[i]});
  }
  return aurc(ConfidenceTable(std::move(entries), "acr"));
}

}  // namespace

AcrOutput acr_confidence(const AcrHeads& heads, const ScoredRecord& record) {
  const Vecd x = head_input(heads.input_spec, record);
  if (heads.rrh.d_in() != x.size() || heads.cgh.d_in() != x.size()) {
    fail("record '" + record.id + "' does not match the heads' input width");
  }
  Vecd c_m(1);
  c_m[0] = msp(record.logits);
  Matd xm(x);
  heads.normalize(xm);
  return outputs_for(heads, xm, c_m).front();
}

std::vector<AcrOutput> acr_outputs(const AcrHeads& heads, const EvalSet& set) {
  check_dims(heads, set);
  Matd x = head_inputs(heads.input_spec, set);
  heads.normalize(x);
  return outputs_for(heads, x, msp_column(set));
}

FusionGradient fusion_gradient(double c_m, double c_r, double alpha, double target) {
  const double c = alpha * c_m + (1.0 - alpha) * c_r;
  const double g = bce_grad(c, target);
  return {g * (c_m - c_r), g * (1.0 - alpha), g};
}

double alpha_gradient_identity(double c_m, double c_r, double alpha, double target) {
  const double c = std::clamp(alpha * c_m + (1.0 - alpha) * c_r, kBceEps, 1.0 - kBceEps);
  return (c_m - c_r) * (c - target) / (c * (1.0 - c));
}

AcrTrainResult acr_train(const EvalSet& train, const EvalSet& val, const TrainConfig& config,
                         const AcrTrainOptions& options) {
  config.validate();
  if (train.k_classes() != val.k_classes() || train.feat_dim() != val.feat_dim()) {
    fail("training and validation sets disagree on dimensions");
  }
  AcrTrainResult result;
  AcrHeads heads = acr_init(options.input_spec, train.k_classes(), train.feat_dim(), config.seed,
                            options.depth, options.d_hidden, options.mode);
  heads.fixed_alpha = options.fixed_alpha;

  Matd x = head_inputs(heads.input_spec, train);
  if (options.standardize) std::tie(heads.input_mean, heads.input_scale) = fit_standardizer(x);
  heads.normalize(x);
  result.heads = heads;
  const Vecd c_m = msp_column(train);
  Vecd target(c_m.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    target[static_cast<Eigen::Index>(i)] = correctness(train.records()[i]) ? 1.0 : 0.0;
  }
  Matd val_x = head_inputs(heads.input_spec, val);
  heads.normalize(val_x);
  const Vecd val_c_m = msp_column(val);
  std::vector<bool> val_correct;
  for (const auto& r : val.records()) val_correct.push_back(correctness(r));

  auto rrh_state = AdamState<double>::for_params(heads.rrh);
  auto cgh_state = AdamState<double>::for_params(heads.cgh);
  // Offset the stream so shuffling is not correlated with initialization.
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  const std::size_t n = train.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  double best = std::numeric_limits<double>::infinity();
  const bool early = config.early_stop == EarlyStop::kValAurc;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t stop = std::min(n, start + config.batch_size);
      const std::span<const std::size_t> idx(order.data() + start, stop - start);
      const int b = static_cast<int>(idx.size());
      const Matd xb = gather(x, idx);
      Vecd cmb(b), tb(b);
      for (int i = 0; i < b; ++i) {
        cmb[i] = c_m[static_cast<Eigen::Index>(idx[i])];
        tb[i] = target[static_cast<Eigen::Index>(idx[i])];
      }
      const auto rrh_masks = sample_masks(heads.rrh, b, config.dropout_p, rng);
      const auto cgh_masks = sample_masks(heads.cgh, b, config.dropout_p, rng);
      const auto rrh_cache = mlp_forward_batch(heads.rrh, xb, &rrh_masks);
      const auto cgh_cache = mlp_forward_batch(heads.cgh, xb, &cgh_masks);
      const Fused f = fuse(heads, cmb, rrh_cache.output, cgh_cache.output);

      Vecd up_rrh(b), up_cgh(b);
      for (int i = 0; i < b; ++i) {
        loss_sum += bce_loss(f.c[i], tb[i]);
        const auto g = fusion_gradient(cmb[i], f.c_r[i], f.alpha[i], tb[i]);
        up_rrh[i] = g.d_residual / b;
        up_cgh[i] = g.d_alpha / b;
      }
      if (uses_rrh(heads.mode)) {
        adam_step(heads.rrh, mlp_backward(heads.rrh, rrh_cache, up_rrh), rrh_state, config);
      }
      if (uses_cgh(heads.mode)) {
        adam_step(heads.cgh, mlp_backward(heads.cgh, cgh_cache, up_cgh), cgh_state, config);
      }
    }
    if (!heads.rrh.all_finite() || !heads.cgh.all_finite()) {
      fail_numeric("ACR training diverged");
    }
    result.epoch_loss.push_back(loss_sum / static_cast<double>(n));
    const double v = fused_aurc(heads, val_x, val_c_m, val_correct);
    result.val_aurc.push_back(v);
    if (!early || v < best) {
      best = v;
      result.heads = heads;
      result.best_epoch = epoch;
    }
  }
  return result;
}

ConfidenceTable acr_table(const AcrHeads& heads, const EvalSet& set) {
  const auto outs = acr_outputs(heads, set);
  std::vector<ConfidenceEntry> entries;
  entries.reserve(outs.size());
  for (std::size_t i = 0; i < outs.size(); ++i) {
    const auto& r = set.records()[i];
    entries.push_back({r.id, outs[i].c_acr, correctness(r)});
  }
  return ConfidenceTable(std::move(entries), heads.method_name());
}

ConfidenceTable rrh_table(const AcrHeads& heads, const EvalSet& set) {
  const auto outs = acr_outputs(heads, set);
  std::vector<ConfidenceEntry> entries;
  entries.reserve(outs.size());
  for (std::size_t i = 0; i < outs.size(); ++i) {
    const auto& r = set.records()[i];
    entries.push_back({r.id, std::clamp(outs[i].c_r, 0.0, 1.0), correctness(r)});
  }
  return ConfidenceTable(std::move(entries), "rrh");
}

AlphaStats alpha_stats(const AcrHeads& heads, const EvalSet& set) {
  const auto outs = acr_outputs(heads, set);
  const double n = static_cast<double>(outs.size());
  AlphaStats s{};
  for (const auto& o : outs) s.mean += o.alpha / n;
  for (const auto& o : outs) {
    s.variance += (o.alpha - s.mean) * (o.alpha - s.mean) / n;
    if (o.alpha < 0.01) s.frac_below_001 += 1.0 / n;
    if (o.alpha > 0.99) s.frac_above_099 += 1.0 / n;
    const int bin = std::clamp(static_cast<int>(o.alpha * 20.0), 0, 19);
    s.histogram[bin] += 1.0 / n;
  }
  return s;
}

double bce_alpha_gradient_check(const AcrHeads& heads, const EvalSet& batch) {
  const auto outs = acr_outputs(heads, batch);
  double worst = 0.0;
  for (std::size_t i = 0; i < outs.size(); ++i) {
    const auto& o = outs[i];
    const double t = correctness(batch.records()[i]) ? 1.0 : 0.0;
    const double trainer = fusion_gradient(o.c_m, o.c_r, o.alpha, t).d_alpha;
    const double identity = alpha_gradient_identity(o.c_m, o.c_r, o.alpha, t);
    worst = std::max(worst, std::abs(trainer - identity));
  }
  return worst;
}

}  // namespace selconf
