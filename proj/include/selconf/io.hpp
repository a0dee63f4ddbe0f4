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

#include <string>

#include <nlohmann/json.hpp>

#include "selconf/acr.hpp"
#include "selconf/confidence.hpp"
#include "selconf/metrics.hpp"
#include "selconf/neural.hpp"

namespace selconf {

using json = nlohmann::json;

json to_json(const VsParams& params);
VsParams vs_params_from_json(const json& j);

/// Shape metadata plus row-major flattened weights per layer.
json to_json(const MlpParams& params);
MlpParams mlp_from_json(const json& j);

json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const json& j);

json to_json(const AcrHeads& heads);
AcrHeads acr_heads_from_json(const json& j);

json to_json(const MetricsReport& report);

json read_json_file(const std::string& path);
void write_json_file(const json& j, const std::string& path);

}  // namespace selconf
