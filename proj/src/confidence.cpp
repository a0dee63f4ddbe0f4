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

#include "selconf/confidence.hpp"

#include <algorithm>

namespace selconf {

namespace {

template <typename Score>
ConfidenceTable build(const EvalSet& set, std::string name, Score&& score) {
  std::vector<ConfidenceEntry> entries;
  entries.reserve(set.size());
  for (const auto& r : set.records()) {
    // Rounding can push a sum of squares a hair past 1.
    const double s = std::clamp(score(r), 0.0, 1.0);
    entries.push_back({r.id, s, correctness(r)});
  }
  return ConfidenceTable(std::move(entries), std::move(name));
}

}  // namespace

ConfidenceTable msp_table(const EvalSet& set) {
  return build(set, "msp", [](const ScoredRecord& r) { return msp(r.logits); });
}

ConfidenceTable doctor_table(const EvalSet& set) {
  return build(set, "doctor", [](const ScoredRecord& r) { return doctor(r.logits); });
}

ConfidenceTable mcd_table(const EvalSet& set) {
  return build(set, "mcd", [](const ScoredRecord& r) {
    if (r.mc_passes.empty()) {
      fail("record '" + r.id + "' has no mc_passes (required by mcd)");
    }
    return mcd_confidence<double>(r.mc_passes);
  });
}

ConfidenceTable vs_table(const EvalSet& set, const VsParams& params) {
  return build(set, "vs", [&](const ScoredRecord& r) {
    return msp(vs_apply(params, r.logits));
  });
}

ConfidenceTable oracle_table(const EvalSet& set) {
  return build(set, "oracle",
               [](const ScoredRecord& r) { return correctness(r) ? 1.0 : 0.0; });
}

ConfidenceTable table_from_scores(const EvalSet& set, std::span<const double> scores,
                                  std::string method_name) {
  if (scores.size() != set.size()) fail("score count does not match set size");
  std::size_t i = 0;
  return build(set, std::move(method_name),
               [&](const ScoredRecord&) { return scores[i++]; });
}

}  // namespace selconf
