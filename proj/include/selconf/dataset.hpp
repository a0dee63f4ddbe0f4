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

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "selconf/types.hpp"

namespace selconf {

/// One frozen classifier output: fused representation, answer logits, label,
/// and optionally the per-pass logits of stochastic forward passes.
struct ScoredRecord {
  std::string id;
  Vecd features;
  Vecd logits;
  int label = 0;
  std::vector<Vecd> mc_passes;

  bool operator==(const ScoredRecord& other) const;
};

enum class Split { kTrainF, kValF, kValG, kTest };

std::string_view to_string(Split split);
Split split_from_string(std::string_view name);

/// A validated, immutable collection of records sharing (K, d).
class EvalSet {
 public:
  /// Validates every record against (k_classes, feat_dim); throws Error.
  EvalSet(std::vector<ScoredRecord> records, int k_classes, int feat_dim,
          Split split = Split::kTest, std::string seed_provenance = {});

  const std::vector<ScoredRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  int k_classes() const { return k_classes_; }
  int feat_dim() const { return feat_dim_; }
  Split split() const { return split_; }
  const std::string& seed_provenance() const { return seed_provenance_; }
  bool has_mc_passes() const;

  bool operator==(const EvalSet& other) const;

 private:
  std::vector<ScoredRecord> records_;
  int k_classes_;
  int feat_dim_;
  Split split_;
  std::string seed_provenance_;
};

/// Argmax with ties resolved to the lowest class index.
int predicted_class(const Vecd& logits);

/// 1 iff the predicted class equals the label.
bool correctness(const ScoredRecord& record);

struct ConfidenceEntry {
  std::string id;
  double confidence = 0.0;
  bool correct = false;
};

/// Per-record confidence paired with correctness.
class ConfidenceTable {
 public:
  ConfidenceTable() = default;
  /// Throws Error on confidences outside [0,1] or duplicate ids.
  ConfidenceTable(std::vector<ConfidenceEntry> entries, std::string method_name);

  const std::vector<ConfidenceEntry>& entries() const { return entries_; }
  const std::string& method_name() const { return method_name_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  std::vector<double> confidences() const;
  std::vector<bool> correctness() const;
  double accuracy() const;

 private:
  std::vector<ConfidenceEntry> entries_;
  std::string method_name_;
};

/// Reads newline-delimited JSON records. A leading metadata object
/// {"k_classes": K, "feat_dim": d} takes the place of the explicit
/// dimensions; when both are given they must agree.
EvalSet parse_records(std::istream& in, std::optional<int> k_classes = {},
                      std::optional<int> feat_dim = {});
EvalSet parse_records_file(const std::string& path,
                           std::optional<int> k_classes = {},
                           std::optional<int> feat_dim = {});

/// Writes the metadata line followed by one line per record.
void serialize_records(const EvalSet& set, std::ostream& out);
void serialize_records_file(const EvalSet& set, const std::string& path);

/// Disjoint seeded partition into (val_g, test); |val_g| = round(f*N),
/// clamped so both parts are non-empty. Input order is kept in each part.
std::pair<EvalSet, EvalSet> split_eval(const EvalSet& full,
                                       double fraction_val_g, uint64_t seed);

/// The four data roles of the evaluation protocol.
struct SplitRoles {
  EvalSet train_proxy;
  EvalSet val_f;
  EvalSet val_g;
  EvalSet test;
};

/// 60/20/8/12 partition into train-proxy, Val-f, Val-g and Test roles.
SplitRoles split_protocol(const EvalSet& full, uint64_t seed);

}  // namespace selconf
