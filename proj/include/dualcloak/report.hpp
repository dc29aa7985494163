// Copyright 2026 The DualCloak Authors
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

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dualcloak/attacks.hpp"
#include "json.hpp"

namespace dualcloak {

struct ModelScore {
    std::string model;
    double asr = 0.0;
    double tau = 0.0;
    /// False for the held-out (black-box) model.
    bool in_ensemble = false;

    friend bool operator==(const ModelScore&, const ModelScore&) = default;
};

/// Written by `evaluate`. Bump kSchemaVersion on any incompatible change.
struct EvaluationReport {
    static constexpr int kSchemaVersion = 1;

    AttackMode mode = AttackMode::age_ftm;
    std::vector<ModelScore> per_model;
    std::optional<double> fid;
    std::optional<double> api_mean_confidence;
    std::size_t n_images = 0;
    AttackConfig config_echo;
    double far = 0.01;
    /// Protected or target files without a counterpart, excluded from scoring.
    std::vector<std::string> unpaired;

    /// ParameterError when a score leaves its range.
    void validate() const;

    friend bool operator==(const EvaluationReport&, const EvaluationReport&) = default;
};

nlohmann::json report_to_json(const EvaluationReport& report);
EvaluationReport report_from_json(const nlohmann::json& j);
void save_report(const EvaluationReport& report, const std::filesystem::path& path);

/// Pretty-printed JSON with a trailing newline, written via a temporary file.
void write_json_file(const nlohmann::json& j, const std::filesystem::path& path);

}  // namespace dualcloak
