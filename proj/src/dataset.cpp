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

#include "selconf/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <unordered_set>

#include <nlohmann/json.hpp>

namespace selconf {

using json = nlohmann::json;

namespace {

bool all_finite(const Vecd& v) { return v.allFinite(); }

void validate_record(const ScoredRecord& r, int k, int d,
                     const std::string& where) {
  if (r.id.empty()) fail(where + ": empty id");
  if (r.logits.size() != k) {
    fail(where + ": logits length " + std::to_string(r.logits.size()) +
         " does not match k_classes " + std::to_string(k));
  }
  if (r.features.size() != d) {
    fail(where + ": features length " + std::to_string(r.features.size()) +
         " does not match feat_dim " + std::to_string(d));
  }
  if (r.label < 0 || r.label >= k) {
    fail(where + ": label " + std::to_string(r.label) + " outside [0, " +
         std::to_string(k) + ")");
  }
  if (!all_finite(r.logits) || !all_finite(r.features)) {
    fail(where + ": non-finite value");
  }
  for (const auto& pass : r.mc_passes) {
    if (pass.size() != k) fail(where + ": mc_passes entry length mismatch");
    if (!all_finite(pass)) fail(where + ": non-finite value in mc_passes");
  }
}

Vecd to_vec(const json& j, const char* field) {
  if (!j.is_array()) fail(std::string("field '") + field + "' is not an array");
  Vecd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) {
      fail(std::string("non-finite or non-numeric value in '") + field + "'");
    }
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

json from_vec(const Vecd& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

ScoredRecord record_from_json(const json& j) {
  if (!j.is_object()) fail("record is not an object");
  ScoredRecord r;
  if (!j.contains("id") || !j["id"].is_string()) fail("missing string 'id'");
  r.id = j["id"].get<std::string>();
  if (!j.contains("label") || !j["label"].is_number_integer()) {
    fail("missing integer 'label'");
  }
  r.label = j["label"].get<int>();
  if (!j.contains("logits")) fail("missing 'logits'");
  r.logits = to_vec(j["logits"], "logits");
  if (!j.contains("features")) fail("missing 'features'");
  r.features = to_vec(j["features"], "features");
  if (j.contains("mc_passes")) {
    const auto& passes = j["mc_passes"];
    if (!passes.is_array()) fail("field 'mc_passes' is not an array");
    for (const auto& p : passes) r.mc_passes.push_back(to_vec(p, "mc_passes"));
  }
  return r;
}

EvalSet subset(const EvalSet& full, const std::vector<std::size_t>& idx,
               Split split, const std::string& provenance) {
  std::vector<ScoredRecord> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(full.records()[i]);
  return EvalSet(std::move(out), full.k_classes(), full.feat_dim(), split,
                 provenance);
}

}  // namespace

bool ScoredRecord::operator==(const ScoredRecord& o) const {
  if (id != o.id || label != o.label || features != o.features ||
      logits != o.logits || mc_passes.size() != o.mc_passes.size()) {
    return false;
  }
  for (std::size_t i = 0; i < mc_passes.size(); ++i) {
    if (mc_passes[i] != o.mc_passes[i]) return false;
  }
  return true;
}

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kTrainF: return "train_f";
    case Split::kValF: return "val_f";
    case Split::kValG: return "val_g";
    case Split::kTest: return "test";
  }
  return "test";
}

Split split_from_string(std::string_view name) {
  if (name == "train_f") return Split::kTrainF;
  if (name == "val_f") return Split::kValF;
  if (name == "val_g") return Split::kValG;
  if (name == "test") return Split::kTest;
  fail("unknown split '" + std::string(name) + "'");
}

EvalSet::EvalSet(std::vector<ScoredRecord> records, int k_classes,
                 int feat_dim, Split split, std::string seed_provenance)
    : records_(std::move(records)),
      k_classes_(k_classes),
      feat_dim_(feat_dim),
      split_(split),
      seed_provenance_(std::move(seed_provenance)) {
  if (k_classes_ < 1) fail("k_classes must be positive");
  if (feat_dim_ < 1) fail("feat_dim must be positive");
  if (records_.empty()) fail("evaluation set is empty");
  std::unordered_set<std::string> seen;
  seen.reserve(records_.size());
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    validate_record(r, k_classes_, feat_dim_, "record " + std::to_string(i));
    if (!seen.insert(r.id).second) fail("duplicate id '" + r.id + "'");
  }
}

bool EvalSet::has_mc_passes() const {
  return std::all_of(records_.begin(), records_.end(),
                     [](const auto& r) { return !r.mc_passes.empty(); });
}

bool EvalSet::operator==(const EvalSet& o) const {
  return k_classes_ == o.k_classes_ && feat_dim_ == o.feat_dim_ &&
         split_ == o.split_ && seed_provenance_ == o.seed_provenance_ &&
         records_ == o.records_;
}

int predicted_class(const Vecd& logits) {
  Eigen::Index best = 0;
  // maxCoeff keeps the first maximum, which is the lowest index.
  logits.maxCoeff(&best);
  return static_cast<int>(best);
}

bool correctness(const ScoredRecord& record) {
  return predicted_class(record.logits) == record.label;
}

ConfidenceTable::ConfidenceTable(std::vector<ConfidenceEntry> entries,
                                 std::string method_name)
    : entries_(std::move(entries)), method_name_(std::move(method_name)) {
  std::unordered_set<std::string> seen;
  seen.reserve(entries_.size());
  for (const auto& e : entries_) {
    if (!(e.confidence >= 0.0 && e.confidence <= 1.0)) {
      fail("confidence for '" + e.id + "' outside [0,1]");
    }
    if (!seen.insert(e.id).second) fail("duplicate id '" + e.id + "'");
  }
}

std::vector<double> ConfidenceTable::confidences() const {
  std::vector<double> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.confidence);
  return out;
}

std::vector<bool> ConfidenceTable::correctness() const {
  std::vector<bool> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.correct);
  return out;
}

double ConfidenceTable::accuracy() const {
  if (entries_.empty()) fail("empty confidence table");
  const auto hits = std::count_if(entries_.begin(), entries_.end(),
                                  [](const auto& e) { return e.correct; });
  return static_cast<double>(hits) / static_cast<double>(entries_.size());
}

EvalSet parse_records(std::istream& in, std::optional<int> k_classes,
                      std::optional<int> feat_dim) {
  std::vector<ScoredRecord> records;
  Split split = Split::kTest;
  std::string provenance;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const std::string where = "line " + std::to_string(line_no);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      fail(where + ": malformed record (" + e.what() + ")");
    }
    if (first && j.is_object() && j.contains("k_classes") && !j.contains("id")) {
      first = false;
      try {
        const int k = j.at("k_classes").get<int>();
        const int d = j.at("feat_dim").get<int>();
        if (k_classes && *k_classes != k) {
          fail(where + ": header k_classes " + std::to_string(k) +
               " conflicts with requested " + std::to_string(*k_classes));
        }
        if (feat_dim && *feat_dim != d) {
          fail(where + ": header feat_dim " + std::to_string(d) +
               " conflicts with requested " + std::to_string(*feat_dim));
        }
        k_classes = k;
        feat_dim = d;
        if (j.contains("split")) split = split_from_string(j["split"].get<std::string>());
        if (j.contains("seed_provenance")) {
          provenance = j["seed_provenance"].get<std::string>();
        }
      } catch (const json::exception& e) {
        fail(where + ": malformed header (" + e.what() + ")");
      }
      continue;
    }
    first = false;
    if (!k_classes || !feat_dim) {
      fail(where + ": k_classes/feat_dim unknown (no header and no flags)");
    }
    ScoredRecord r;
    try {
      r = record_from_json(j);
    } catch (const Error& e) {
      fail(where + ": " + e.what());
    } catch (const json::exception& e) {
      fail(where + ": malformed record (" + e.what() + ")");
    }
    validate_record(r, *k_classes, *feat_dim, where);
    if (!seen.insert(r.id).second) fail(where + ": duplicate id '" + r.id + "'");
    records.push_back(std::move(r));
  }
  if (records.empty()) fail("no records in input");
  return EvalSet(std::move(records), *k_classes, *feat_dim, split,
                 std::move(provenance));
}

EvalSet parse_records_file(const std::string& path,
                           std::optional<int> k_classes,
                           std::optional<int> feat_dim) {
  std::ifstream in(path);
  if (!in) fail("cannot open '" + path + "'");
  return parse_records(in, k_classes, feat_dim);
}

void serialize_records(const EvalSet& set, std::ostream& out) {
  json header = {{"k_classes", set.k_classes()},
                 {"feat_dim", set.feat_dim()},
                 {"split", std::string(to_string(set.split()))},
                 {"seed_provenance", set.seed_provenance()}};
  out << header.dump() << '\n';
  for (const auto& r : set.records()) {
    json j = {{"id", r.id},
              {"label", r.label},
              {"logits", from_vec(r.logits)},
              {"features", from_vec(r.features)}};
    if (!r.mc_passes.empty()) {
      json passes = json::array();
      for (const auto& p : r.mc_passes) passes.push_back(from_vec(p));
      j["mc_passes"] = std::move(passes);
    }
    out << j.dump() << '\n';
  }
}

void serialize_records_file(const EvalSet& set, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot write '" + path + "'");
  serialize_records(set, out);
}

std::pair<EvalSet, EvalSet> split_eval(const EvalSet& full,
                                       double fraction_val_g, uint64_t seed) {
  if (!(fraction_val_g > 0.0 && fraction_val_g < 1.0)) {
    fail("fraction_val_g must lie in (0,1)");
  }
  const std::size_t n = full.size();
  if (n < 2) fail("set too small to split into two non-empty parts");
  auto n_val = static_cast<std::size_t>(
      std::floor(fraction_val_g * static_cast<double>(n) + 0.5));
  n_val = std::clamp<std::size_t>(n_val, 1, n - 1);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::size_t> val(order.begin(), order.begin() + n_val);
  std::vector<std::size_t> test(order.begin() + n_val, order.end());
  std::sort(val.begin(), val.end());
  std::sort(test.begin(), test.end());

  const std::string prov = full.seed_provenance() + (full.seed_provenance().empty() ? "" : ";") +
                           "split_eval(f=" + std::to_string(fraction_val_g) +
                           ",seed=" + std::to_string(seed) + ")";
  return {subset(full, val, Split::kValG, prov),
          subset(full, test, Split::kTest, prov)};
}

SplitRoles split_protocol(const EvalSet& full, uint64_t seed) {
  // 60% | 20% | 8% | 12% via successive disjoint splits.
  auto [train_proxy, rest] = split_eval(full, 0.6, seed);
  auto [val_f, held] = split_eval(rest, 0.5, seed + 1);
  auto [val_g, test] = split_eval(held, 0.4, seed + 2);
  const std::string prov = full.seed_provenance() +
                           (full.seed_provenance().empty() ? "" : ";") +
                           "protocol(seed=" + std::to_string(seed) +
                           ",val_f disjoint from val_g)";
  auto retag = [&](const EvalSet& s, Split split) {
    return EvalSet(s.records(), s.k_classes(), s.feat_dim(), split, prov);
  };
  return {retag(train_proxy, Split::kTrainF), retag(val_f, Split::kValF),
          retag(val_g, Split::kValG), retag(test, Split::kTest)};
}

}  // namespace selconf
