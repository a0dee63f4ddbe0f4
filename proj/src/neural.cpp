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

#include "selconf/neural.hpp"

#include <limits>
#include <numeric>

#include "selconf/metrics.hpp"

namespace selconf {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) fail("learning rate must be positive");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    fail("adam betas must lie in [0,1)");
  }
  if (!(adam_eps > 0.0)) fail("adam eps must be positive");
  if (batch_size < 1) fail("batch size must be positive");
  if (epochs < 0) fail("epochs must be non-negative");
  if (!(dropout_p >= 0.0 && dropout_p < 1.0)) fail("dropout_p must lie in [0,1)");
}

MlpParams mlp_init(int d_in, int d_hidden, int depth, std::mt19937_64& rng) {
  MlpParams p = MlpParams::zeros(d_in, d_hidden, depth);
  for (auto& w : p.weights) {
    const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = dist(rng);
    }
  }
  return p;
}

DropoutMasks<double> sample_masks(const MlpParams& params, int batch, double p,
                                  std::mt19937_64& rng) {
  DropoutMasks<double> masks;
  masks.p = p;
  std::bernoulli_distribution keep(1.0 - p);
  for (int l = 0; l + 1 < params.depth(); ++l) {
    Matd m(params.weights[l].rows(), batch);
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = keep(rng) ? 1.0 : 0.0;
    }
    masks.keep.push_back(std::move(m));
  }
  return masks;
}

Vecd mlp_predict(const MlpParams& params, const Matd& x) {
  return mlp_forward_batch(params, x).output;
}

namespace {

double head_aurc(const Vecd& scores, const Vecd& targets) {
  std::vector<ConfidenceEntry> entries;
  entries.reserve(static_cast<std::size_t>(scores.size()));
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    entries.push_back({std::to_string(i), std::clamp(scores[i], 0.0, 1.0), targets[i] > 0.5});
  }
  return aurc(ConfidenceTable(std::move(entries), "head"));
}

Matd gather_columns(const Matd& x, std::span<const std::size_t> idx) {
  Matd out(x.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) {
    out.col(static_cast<Eigen::Index>(j)) = x.col(static_cast<Eigen::Index>(idx[j]));
  }
  return out;
}

}  // namespace

BinaryHeadResult train_binary_head(const MlpParams& params0, const BinaryDataset& data,
                                   const TrainConfig& config,
                                   const std::optional<BinaryDataset>& validation) {
  config.validate();
  const auto n = static_cast<std::size_t>(data.x.cols());
  if (n == 0) fail("training set is empty");
  if (data.targets.size() != data.x.cols()) fail("target count does not match inputs");

  BinaryHeadResult result;
  result.params = params0;
  MlpParams params = params0;
  auto state = AdamState<double>::for_params(params);
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const bool track_val = validation && config.early_stop == EarlyStop::kValAurc;
  double best_val = std::numeric_limits<double>::infinity();

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t stop = std::min(n, start + config.batch_size);
      const std::span<const std::size_t> idx(order.data() + start, stop - start);
      const Matd xb = gather_columns(data.x, idx);
      const int b = static_cast<int>(idx.size());
      const auto masks = sample_masks(params, b, config.dropout_p, rng);
      const auto cache = mlp_forward_batch(params, xb, &masks);
      Vecd upstream(b);
      for (int i = 0; i < b; ++i) {
        const double t = data.targets[static_cast<Eigen::Index>(idx[i])];
        loss_sum += bce_loss(cache.output[i], t);
        upstream[i] = bce_grad(cache.output[i], t) / b;
      }
      adam_step(params, mlp_backward(params, cache, upstream), state, config);
    }
    if (!params.all_finite()) fail_numeric("head training diverged");
    result.epoch_loss.push_back(loss_sum / static_cast<double>(n));
    if (track_val) {
      const double v = head_aurc(mlp_predict(params, validation->x), validation->targets);
      result.val_aurc.push_back(v);
      if (v < best_val) {
        best_val = v;
        result.params = params;
        result.best_epoch = epoch;
      }
    } else {
      result.params = params;
      result.best_epoch = epoch;
    }
  }
  return result;
}

VsTrainResult vs_train(std::span<const Vecd> logits, std::span<const int> labels,
                       const TrainConfig& config) {
  config.validate();
  if (logits.empty()) fail("vector scaling needs a non-empty training set");
  if (labels.size() != logits.size()) fail("label count does not match logits");
  const auto k = logits.front().size();
  Matd z(k, static_cast<Eigen::Index>(logits.size()));
  Matd onehot = Matd::Zero(k, z.cols());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (logits[i].size() != k) fail("inconsistent number of classes");
    if (labels[i] < 0 || labels[i] >= k) fail("label outside [0, K)");
    z.col(static_cast<Eigen::Index>(i)) = logits[i];
    onehot(labels[i], static_cast<Eigen::Index>(i)) = 1.0;
  }

  // The diagonal map is a K-row "layer"; reuse the Adam machinery on it by
  // packing (w, b) as a 1-layer parameter set.
  MlpParams packed;
  packed.weights.push_back(Matd::Ones(k, 1));
  packed.biases.push_back(Vecd::Zero(k));
  auto state = AdamState<double>::for_params(packed);

  const std::size_t n = logits.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(config.seed);
  VsTrainResult result;
  const double kd = static_cast<double>(k);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t stop = std::min(n, start + config.batch_size);
      const std::span<const std::size_t> idx(order.data() + start, stop - start);
      const Matd zb = gather_columns(z, idx);
      const Matd tb = gather_columns(onehot, idx);
      const Vecd& w = packed.weights[0].col(0);
      const Matd a = (zb.array().colwise() * w.array()).matrix().colwise() + packed.biases[0];
      const Matd s = a.unaryExpr([](double v) { return sigmoid(v); });
      for (Eigen::Index j = 0; j < s.cols(); ++j) {
        for (Eigen::Index c = 0; c < k; ++c) loss_sum += bce_loss(s(c, j), tb(c, j)) / kd;
      }
      // d(mean BCE)/da = (s - t) / (K * B)
      const Matd da = (s - tb) / (kd * static_cast<double>(idx.size()));
      MlpParams grad = packed.zeros_like();
      grad.weights[0].col(0) = da.cwiseProduct(zb).rowwise().sum();
      grad.biases[0] = da.rowwise().sum();
      adam_step(packed, grad, state, config);
    }
    result.epoch_loss.push_back(loss_sum / static_cast<double>(n));
  }
  if (!packed.all_finite()) fail_numeric("vector scaling training diverged");
  result.params = {packed.weights[0].col(0), packed.biases[0]};
  return result;
}

VsTrainResult vs_train(const EvalSet& set, const TrainConfig& config) {
  std::vector<Vecd> logits;
  std::vector<int> labels;
  for (const auto& r : set.records()) {
    logits.push_back(r.logits);
    labels.push_back(r.label);
  }
  return vs_train(logits, labels, config);
}

}  // namespace selconf
