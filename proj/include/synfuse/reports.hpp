// Copyright 2026 The synfuse Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <string>

#include <json.hpp>

#include "synfuse/training.hpp"

namespace synfuse {

inline constexpr int kReportSpecVersion = 1;

nlohmann::json metrics_to_json(const MetricsReport& m);
nlohmann::json train_config_to_json(const TrainConfig& cfg);
nlohmann::json train_report_to_json(const TrainReport& rep,
                                    bool include_timing);
nlohmann::json estimate_to_json(const DependenceEstimate& est,
                                const nlohmann::json& config_echo);
nlohmann::json grid_to_json(const GridResult& grid);
std::string grid_to_csv(const GridResult& grid);

// Writes via a temp file and rename so failures never leave partial output.
void write_text_atomic(const std::string& path, const std::string& content);

}  // namespace synfuse
