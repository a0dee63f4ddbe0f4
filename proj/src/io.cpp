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

#include "selconf/io.hpp"

#include <fstream>

namespace selconf {

namespace {

std::vector<double> flat(const Vecd& v) { return {v.data(), v.data() + v.size()}; }

Vecd vec_from(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vecd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

template <typename F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    fail(std::string("malformed ") + what + ": " + e.what());
  }
}

}  // namespace

json to_json(const VsParams& params) {
  return {{"diag_w", flat(params.diag_w)}, {"bias", flat(params.bias)}};
}

VsParams vs_params_from_json(const json& j) {
  return guarded("vector-scaling parameters", [&] {
    VsParams p{vec_from(j.at("diag_w")), vec_from(j.at("bias"))};
    if (p.diag_w.size() != p.bias.size() || p.diag_w.size() == 0) {
      fail("vector-scaling diag_w and bias lengths differ");
    }
    if (!p.diag_w.allFinite() || !p.bias.allFinite()) fail("non-finite vector-scaling parameter");
    return p;
  });
}

json to_json(const MlpParams& params) {
  json layers = json::array();
  for (int l = 0; l < params.depth(); ++l) {
    const auto& w = params.weights[l];
    std::vector<double> row_major;
    row_major.reserve(static_cast<std::size_t>(w.size()));
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) row_major.push_back(w(i, c));
    }
    layers.push_back({{"rows", w.rows()},
                      {"cols", w.cols()},
                      {"weights", row_major},
                      {"bias", flat(params.biases[l])}});
  }
  return {{"d_in", params.d_in()},
          {"d_hidden", params.d_hidden()},
          {"depth", params.depth()},
          {"layers", layers}};
}

MlpParams mlp_from_json(const json& j) {
  return guarded("perceptron parameters", [&] {
    MlpParams p;
    for (const auto& layer : j.at("layers")) {
      const auto rows = layer.at("rows").get<Eigen::Index>();
      const auto cols = layer.at("cols").get<Eigen::Index>();
      const auto w = layer.at("weights").get<std::vector<double>>();
      if (static_cast<Eigen::Index>(w.size()) != rows * cols) fail("layer weight count mismatch");
      Matd m(rows, cols);
      for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = w[static_cast<std::size_t>(i * cols + c)];
      }
      Vecd b = vec_from(layer.at("bias"));
      if (b.size() != rows) fail("layer bias length mismatch");
      p.weights.push_back(std::move(m));
      p.biases.push_back(std::move(b));
    }
    if (p.depth() < 1) fail("perceptron has no layers");
    for (int l = 1; l < p.depth(); ++l) {
      if (p.weights[l].cols() != p.weights[l - 1].rows()) fail("inconsistent layer shapes");
    }
    if (p.weights.back().rows() != 1) fail("output layer must have one unit");
    if (!p.all_finite()) fail("non-finite perceptron parameter");
    return p;
  });
}

json to_json(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate},
          {"adam_beta1", c.adam_beta1},
          {"adam_beta2", c.adam_beta2},
          {"adam_eps", c.adam_eps},
          {"batch_size", c.batch_size},
          {"epochs", c.epochs},
          {"dropout_p", c.dropout_p},
          {"seed", c.seed},
          {"early_stop", c.early_stop == EarlyStop::kValAurc ? "val_aurc" : "none"}};
}

TrainConfig train_config_from_json(const json& j) {
  return guarded("training config", [&] {
    TrainConfig c;
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.adam_beta1 = j.value("adam_beta1", c.adam_beta1);
    c.adam_beta2 = j.value("adam_beta2", c.adam_beta2);
    c.adam_eps = j.value("adam_eps", c.adam_eps);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.epochs = j.value("epochs", c.epochs);
    c.dropout_p = j.value("dropout_p", c.dropout_p);
    c.seed = j.value("seed", c.seed);
    c.early_stop = j.value("early_stop", std::string("val_aurc")) == "none" ? EarlyStop::kNone
                                                                           : EarlyStop::kValAurc;
    c.validate();
    return c;
  });
}

json to_json(const AcrHeads& heads) {
  std::vector<std::string> spec;
  for (auto b : heads.input_spec) spec.emplace_back(to_string(b));
  return {{"input_spec", spec},
          {"mode", std::string(to_string(heads.mode))},
          {"fixed_alpha", heads.fixed_alpha},
          {"input_mean", flat(heads.input_mean)},
          {"input_scale", flat(heads.input_scale)},
          {"rrh", to_json(heads.rrh)},
          {"cgh", to_json(heads.cgh)}};
}

AcrHeads acr_heads_from_json(const json& j) {
  return guarded("ACR heads", [&] {
    AcrHeads h;
    h.input_spec.clear();
    for (const auto& s : j.at("input_spec")) {
      h.input_spec.push_back(parse_input_spec(s.get<std::string>()).front());
    }
    if (h.input_spec.empty()) fail("ACR heads have an empty input spec");
    h.mode = acr_mode_from_string(j.value("mode", std::string("full")));
    h.fixed_alpha = j.value("fixed_alpha", 0.5);
    h.rrh = mlp_from_json(j.at("rrh"));
    h.cgh = mlp_from_json(j.at("cgh"));
    if (h.rrh.d_in() != h.cgh.d_in()) fail("ACR heads disagree on input width");
    if (j.contains("input_mean")) {
      h.input_mean = vec_from(j.at("input_mean"));
      h.input_scale = vec_from(j.at("input_scale"));
      if (h.input_mean.size() != 0 &&
          (h.input_mean.size() != h.rrh.d_in() || h.input_scale.size() != h.rrh.d_in())) {
        fail("ACR standardizer width does not match the heads");
      }
      if (!(h.input_scale.array() > 0.0).all()) fail("ACR standardizer scale must be positive");
    }
    return h;
  });
}

json to_json(const MetricsReport& r) {
  json row = {{"method", r.method_name}};
  for (const auto& [risk, cov] : r.c_at_r) row[risk_column(risk)] = cov * 100.0;
  row["aurc"] = r.aurc * 100.0;
  row["ece"] = r.ece * 100.0;
  row["accuracy"] = r.accuracy * 100.0;
  row["n"] = r.n;
  return row;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail("'" + path + "' is not valid JSON: " + e.what());
  }
}

void write_json_file(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

}  // namespace selconf
