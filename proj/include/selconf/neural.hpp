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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "selconf/confidence.hpp"
#include "selconf/types.hpp"

namespace selconf {

/// Clamp applied to probabilities before taking logarithms.
inline constexpr double kBceEps = 1e-7;

/// Perceptron with `depth` linear layers: depth-1 hidden layers of width
/// d_hidden (ReLU + inverted dropout), then a single sigmoid output unit.
/// depth 1 is logistic regression on the input.
template <typename Scalar>
struct BasicMlp {
  std::vector<Mat<Scalar>> weights;  // layer l maps in_l -> out_l
  std::vector<Vec<Scalar>> biases;

  int depth() const { return static_cast<int>(weights.size()); }
  int d_in() const { return weights.empty() ? 0 : static_cast<int>(weights.front().cols()); }
  int d_hidden() const {
    return depth() > 1 ? static_cast<int>(weights.front().rows()) : 0;
  }

  static BasicMlp zeros(int d_in, int d_hidden, int depth) {
    if (d_in < 1 || depth < 1 || (depth > 1 && d_hidden < 1)) {
      fail("invalid perceptron shape");
    }
    BasicMlp p;
    int in = d_in;
    for (int l = 0; l < depth; ++l) {
      const int out = l + 1 == depth ? 1 : d_hidden;
      p.weights.push_back(Mat<Scalar>::Zero(out, in));
      p.biases.push_back(Vec<Scalar>::Zero(out));
      in = out;
    }
    return p;
  }

  BasicMlp zeros_like() const {
    BasicMlp p;
    for (const auto& w : weights) p.weights.push_back(Mat<Scalar>::Zero(w.rows(), w.cols()));
    for (const auto& b : biases) p.biases.push_back(Vec<Scalar>::Zero(b.size()));
    return p;
  }

  bool same_shape(const BasicMlp& o) const {
    if (o.weights.size() != weights.size() || o.biases.size() != biases.size()) return false;
    for (std::size_t l = 0; l < weights.size(); ++l) {
      if (o.weights[l].rows() != weights[l].rows() || o.weights[l].cols() != weights[l].cols() ||
          o.biases[l].size() != biases[l].size()) {
        return false;
      }
    }
    return true;
  }

  bool all_finite() const {
    for (const auto& w : weights) if (!w.allFinite()) return false;
    for (const auto& b : biases) if (!b.allFinite()) return false;
    return true;
  }

  bool operator==(const BasicMlp& o) const {
    if (!same_shape(o)) return false;
    for (std::size_t l = 0; l < weights.size(); ++l) {
      if (weights[l] != o.weights[l] || biases[l] != o.biases[l]) return false;
    }
    return true;
  }
};

using MlpParams = BasicMlp<double>;

/// Keep-bits (0/1) per hidden unit and sample, one matrix per hidden layer.
template <typename Scalar>
struct DropoutMasks {
  double p = 0.0;
  std::vector<Mat<Scalar>> keep;
};

/// Everything backprop needs; columns are samples.
template <typename Scalar>
struct MlpCache {
  std::vector<Mat<Scalar>> inputs;   // input to each layer
  std::vector<Mat<Scalar>> preacts;  // pre-activation of each layer
  std::vector<Mat<Scalar>> scales;   // dropout scale per hidden layer (empty: none)
  Vec<Scalar> output;
};

template <typename Scalar>
Scalar sigmoid(Scalar x) {
  using std::exp;
  return x >= Scalar(0) ? Scalar(1) / (Scalar(1) + exp(-x))
                        : exp(x) / (Scalar(1) + exp(x));
}

/// Batched forward pass; `x` holds one sample per column.
template <typename Scalar>
MlpCache<Scalar> mlp_forward_batch(const BasicMlp<Scalar>& params, const Mat<Scalar>& x,
                                   const DropoutMasks<Scalar>* masks = nullptr) {
  if (params.depth() < 1) fail("perceptron has no layers");
  if (x.rows() != params.d_in()) fail("input width does not match perceptron d_in");
  const int hidden_layers = params.depth() - 1;
  if (masks && static_cast<int>(masks->keep.size()) != hidden_layers) {
    fail("dropout masks do not match the hidden layer count");
  }
  MlpCache<Scalar> cache;
  Mat<Scalar> a = x;
  for (int l = 0; l < params.depth(); ++l) {
    cache.inputs.push_back(a);
    Mat<Scalar> z = (params.weights[l] * a).colwise() + params.biases[l];
    cache.preacts.push_back(z);
    if (l + 1 == params.depth()) {
      cache.output = z.row(0).transpose().unaryExpr([](Scalar v) { return sigmoid(v); });
    } else {
      a = z.cwiseMax(Scalar(0));
      if (masks && masks->p > 0.0) {
        const auto& keep = masks->keep[l];
        if (keep.rows() != a.rows() || keep.cols() != a.cols()) {
          fail("dropout mask shape mismatch");
        }
        Mat<Scalar> scale = keep * Scalar(1.0 / (1.0 - masks->p));
        a = a.cwiseProduct(scale);
        cache.scales.push_back(std::move(scale));
      } else {
        cache.scales.emplace_back();
      }
    }
  }
  return cache;
}

/// Single-sample forward pass.
template <typename Scalar>
std::pair<Scalar, MlpCache<Scalar>> mlp_forward(const BasicMlp<Scalar>& params,
                                                const Vec<Scalar>& input,
                                                const DropoutMasks<Scalar>* masks = nullptr) {
  Mat<Scalar> x = input;
  auto cache = mlp_forward_batch(params, x, masks);
  const Scalar out = cache.output[0];
  return {out, std::move(cache)};
}

/// Gradient of sum_i upstream_i * output_i with respect to every parameter,
/// where upstream_i is dL/d(output_i). ReLU uses subgradient 0 at 0.
template <typename Scalar>
BasicMlp<Scalar> mlp_backward(const BasicMlp<Scalar>& params, const MlpCache<Scalar>& cache,
                              const Vec<Scalar>& upstream) {
  const int depth = params.depth();
  if (static_cast<int>(cache.preacts.size()) != depth ||
      static_cast<int>(cache.inputs.size()) != depth ||
      cache.output.size() != upstream.size()) {
    fail("stale or mismatched forward cache");
  }
  for (int l = 0; l < depth; ++l) {
    if (cache.preacts[l].rows() != params.weights[l].rows() ||
        cache.inputs[l].rows() != params.weights[l].cols()) {
      fail("stale or mismatched forward cache");
    }
  }
  BasicMlp<Scalar> grad = params.zeros_like();
  // d output / d z_out = s (1 - s)
  Mat<Scalar> delta =
      (upstream.array() * cache.output.array() * (Scalar(1) - cache.output.array()))
          .matrix()
          .transpose();
  for (int l = depth - 1; l >= 0; --l) {
    grad.weights[l] = delta * cache.inputs[l].transpose();
    grad.biases[l] = delta.rowwise().sum();
    if (l == 0) break;
    Mat<Scalar> back = params.weights[l].transpose() * delta;
    const auto& scale = cache.scales[l - 1];
    if (scale.size() > 0) back = back.cwiseProduct(scale);
    const auto& z = cache.preacts[l - 1];
    delta = back.cwiseProduct(
        z.unaryExpr([](Scalar v) { return v > Scalar(0) ? Scalar(1) : Scalar(0); }));
  }
  return grad;
}

template <typename Scalar>
BasicMlp<Scalar> mlp_backward(const BasicMlp<Scalar>& params, const MlpCache<Scalar>& cache,
                              Scalar upstream) {
  Vec<Scalar> u(1);
  u[0] = upstream;
  return mlp_backward(params, cache, u);
}

/// Binary cross-entropy with the prediction clamped to [eps, 1-eps].
template <typename Scalar>
Scalar bce_loss(Scalar pred, Scalar target) {
  using std::log;
  const Scalar p = std::clamp(pred, Scalar(kBceEps), Scalar(1.0 - kBceEps));
  return -(target * log(p) + (Scalar(1) - target) * log(Scalar(1) - p));
}

/// dL/dpred of bce_loss, evaluated at the clamped prediction.
template <typename Scalar>
Scalar bce_grad(Scalar pred, Scalar target) {
  const Scalar p = std::clamp(pred, Scalar(kBceEps), Scalar(1.0 - kBceEps));
  return (p - target) / (p * (Scalar(1) - p));
}

enum class EarlyStop { kNone, kValAurc };

struct TrainConfig {
  double learning_rate = 8e-5;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int batch_size = 64;
  int epochs = 30;
  double dropout_p = 0.1;
  uint64_t seed = 0;
  EarlyStop early_stop = EarlyStop::kValAurc;

  void validate() const;
};

template <typename Scalar>
struct AdamState {
  BasicMlp<Scalar> m;
  BasicMlp<Scalar> v;
  long t = 0;

  static AdamState for_params(const BasicMlp<Scalar>& p) {
    return {p.zeros_like(), p.zeros_like(), 0};
  }
};

/// One bias-corrected Adam update, in place.
template <typename Scalar>
void adam_step(BasicMlp<Scalar>& params, const BasicMlp<Scalar>& grads,
               AdamState<Scalar>& state, const TrainConfig& config) {
  if (!params.same_shape(grads) || !params.same_shape(state.m) || !params.same_shape(state.v)) {
    fail("adam: parameter, gradient and state shapes differ");
  }
  ++state.t;
  const Scalar b1 = Scalar(config.adam_beta1);
  const Scalar b2 = Scalar(config.adam_beta2);
  const Scalar c1 = Scalar(1) - Scalar(std::pow(config.adam_beta1, double(state.t)));
  const Scalar c2 = Scalar(1) - Scalar(std::pow(config.adam_beta2, double(state.t)));
  const Scalar lr = Scalar(config.learning_rate);
  const Scalar eps = Scalar(config.adam_eps);
  auto update = [&](auto& w, const auto& g, auto& m, auto& v) {
    m = b1 * m + (Scalar(1) - b1) * g;
    v = b2 * v + (Scalar(1) - b2) * g.cwiseAbs2();
    w.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  };
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    update(params.weights[l], grads.weights[l], state.m.weights[l], state.v.weights[l]);
    update(params.biases[l], grads.biases[l], state.m.biases[l], state.v.biases[l]);
  }
}

/// Glorot-uniform weights, zero biases.
MlpParams mlp_init(int d_in, int d_hidden, int depth, std::mt19937_64& rng);

/// Fresh keep-masks for a batch of `batch` samples.
DropoutMasks<double> sample_masks(const MlpParams& params, int batch, double p,
                                  std::mt19937_64& rng);

/// Inference over a batch without dropout.
Vecd mlp_predict(const MlpParams& params, const Matd& x);

/// Inputs are columns of `x`; targets are 0/1.
struct BinaryDataset {
  Matd x;
  Vecd targets;
};

struct BinaryHeadResult {
  MlpParams params;
  std::vector<double> epoch_loss;
  std::vector<double> val_aurc;
  int best_epoch = 0;
};

/// Minibatch Adam on mean BCE. With a validation set and kValAurc, returns
/// the epoch with lowest validation AURC of the head output.
BinaryHeadResult train_binary_head(const MlpParams& params0, const BinaryDataset& data,
                                   const TrainConfig& config,
                                   const std::optional<BinaryDataset>& validation = {});

struct VsTrainResult {
  VsParams params;
  std::vector<double> epoch_loss;
};

/// Fits diagonal scale (init 1) and bias (init 0) by per-class sigmoid BCE
/// against one-hot labels.
VsTrainResult vs_train(std::span<const Vecd> logits, std::span<const int> labels,
                       const TrainConfig& config);
VsTrainResult vs_train(const EvalSet& set, const TrainConfig& config);

}  // namespace selconf
