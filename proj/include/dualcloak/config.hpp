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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dualcloak/attacks.hpp"
#include "json.hpp"

namespace dualcloak {

struct AttributeSettings {
    /// Built-in attribute ("smile", "age", "none") used when `file` is empty.
    std::string name = "smile";
    std::filesystem::path file;
    /// Replaces the stored strength when set.
    std::optional<double> strength;

    friend bool operator==(const AttributeSettings&, const AttributeSettings&) = default;
};

struct ParserSettings {
    std::string name = "fixture";
    std::filesystem::path annotations;

    friend bool operator==(const ParserSettings&, const ParserSettings&) = default;
};

struct IoSettings {
    /// An image file or a directory of .png/.jpg images.
    std::filesystem::path input;
    std::filesystem::path output;

    friend bool operator==(const IoSettings&, const IoSettings&) = default;
};

struct EvaluationSettings {
    double far = 0.01;
    /// Output of `calibrate`; when empty, thresholds are calibrated on the
    /// built-in synthetic impostor pairs.
    std::filesystem::path thresholds;
    int synthetic_impostor_pairs = 500;
    /// Verification API base URL; empty starts an in-process mock server.
    std::string api_endpoint;
    double api_timeout_s = 10.0;
    int api_retries = 2;
    /// Maximum concurrent API requests.
    int api_parallelism = 1;
    int fid_dim = 8;

    friend bool operator==(const EvaluationSettings&, const EvaluationSettings&) = default;
};

struct RunConfig {
    static constexpr int kSchemaVersion = 1;

    AttackConfig attack;
    std::vector<std::string> ensemble{"toyconv-1", "toyconv-2", "toyconv-3"};
    std::string holdout = "toyconv-4";
    std::string generator = "toy-decoder";
    AttributeSettings attribute;
    ParserSettings parser;
    /// One target for every input, or a directory holding NAME.png per input.
    std::filesystem::path target_image;
    IoSettings io;
    std::uint64_t seed = 0;
    /// Worker threads for per-image jobs; 0 means one per logical core.
    int workers = 0;
    EvaluationSettings evaluation;

    /// UsageError when the holdout model is part of the attack ensemble.
    void require_disjoint_holdout() const;

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

nlohmann::json attack_config_to_json(const AttackConfig& config);
/// Strict: unknown keys and wrong types raise UsageError naming the field.
AttackConfig attack_config_from_json(const nlohmann::json& j, const std::string& prefix = "attack");

nlohmann::json config_to_json(const RunConfig& config);
/// Strict parse; relative paths resolve against `base_dir`.
RunConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);

/// Sets a dotted path ("attack.epsilon=0.05") in a JSON tree. The value is
/// read as JSON when it parses, otherwise as a string.
void apply_override(nlohmann::json& root, std::string_view assignment);

/// Reads the file, applies overrides in order, then parses strictly.
RunConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

}  // namespace dualcloak
