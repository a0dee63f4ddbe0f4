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

#include <span>
#include <string>
#include <vector>

#include "selconf/dataset.hpp"
#include "selconf/types.hpp"

namespace selconf {

/// Max-shifted softmax; finite for logits up to |1e4| and beyond.
template <typename Derived>
Vec<typename Derived::Scalar> softmax(const Eigen::MatrixBase<Derived>& logits) {
  using Scalar = typename Derived::Scalar;
  if (logits.size() == 0) fail("softmax of an empty vector");
  if (!logits.allFinite()) fail("softmax of a non-finite vector");
  const Scalar shift = logits.maxCoeff();
  Vec<Scalar> p = (logits.derived().array() - shift).exp().matrix();
  p /= p.sum();
  return p;
}

/// Maximum softmax probability, in [1/K, 1].
template <typename Derived>
typename Derived::Scalar msp(const Eigen::MatrixBase<Derived>& logits) {
  if (logits.size() < 2) fail("msp needs at least two classes");
  return softmax(logits).maxCoeff();
}

/// Sum of squared class probabilities (complement of the Gini impurity).
template <typename Derived>
typename Derived::Scalar doctor(const Eigen::MatrixBase<Derived>& logits) {
  if (logits.size() < 2) fail("doctor needs at least two classes");
  return softmax(logits).squaredNorm();
}

/// Peak of the pass-averaged predictive distribution.
template <typename Scalar>
Scalar mcd_confidence(std::span<const Vec<Scalar>> passes) {
  if (passes.empty()) fail("mcd_confidence needs at least one pass");
  const auto k = passes.front().size();
  Vec<Scalar> mean = Vec<Scalar>::Zero(k);
  for (const auto& pass : passes) {
    if (pass.size() != k) fail("mc pass length mismatch");
    mean += softmax(pass);
  }
  mean /= static_cast<Scalar>(passes.size());
  return mean.maxCoeff();
}

/// Diagonal affine recalibration of the logits.
struct VsParams {
  Vecd diag_w;
  Vecd bias;

  static VsParams identity(int k) {
    return {Vecd::Ones(k), Vecd::Zero(k)};
  }
};

template <typename Derived>
Vec<typename Derived::Scalar> vs_apply(const VsParams& params,
                                       const Eigen::MatrixBase<Derived>& logits) {
  using Scalar = typename Derived::Scalar;
  if (params.diag_w.size() != logits.size() || params.bias.size() != logits.size()) {
    fail("vector-scaling parameters do not match the number of classes");
  }
  return (params.diag_w.template cast<Scalar>().cwiseProduct(logits) +
          params.bias.template cast<Scalar>());
}

// Table builders. Correctness is always taken from the record's own logits,
// so recalibration never changes which entries count as correct.
ConfidenceTable msp_table(const EvalSet& set);
ConfidenceTable doctor_table(const EvalSet& set);
/// Throws Error naming `mc_passes` when any record lacks passes.
ConfidenceTable mcd_table(const EvalSet& set);
ConfidenceTable vs_table(const EvalSet& set, const VsParams& params);
/// Confidence equal to the correctness indicator.
ConfidenceTable oracle_table(const EvalSet& set);
/// Arbitrary per-record scores, in record order.
ConfidenceTable table_from_scores(const EvalSet& set, std::span<const double> scores,
                                  std::string method_name);

}  // namespace selconf
