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

#include "dualcloak/report.hpp"

#include <cmath>
#include <fstream>

#include "dualcloak/config.hpp"
#include "dualcloak/errors.hpp"

namespace dualcloak {

void EvaluationReport::validate() const {
    for (const auto& m : per_model) {
        if (!(m.asr >= 0.0 && m.asr <= 1.0)) throw ParameterError("asr of " + m.model + " is outside [0, 1]");
    }
    if (fid && !(*fid >= 0.0)) throw ParameterError("fid must be >= 0");
    if (api_mean_confidence && !(*api_mean_confidence >= 0.0 && *api_mean_confidence <= 100.0)) {
        throw ParameterError("api_mean_confidence is outside [0, 100]");
    }
}

nlohmann::json report_to_json(const EvaluationReport& r) {
    r.validate();
    nlohmann::json models = nlohmann::json::array();
    for (const auto& m : r.per_model) {
        models.push_back({{"model", m.model}, {"asr", m.asr}, {"tau", m.tau}, {"in_ensemble", m.in_ensemble}});
    }
    nlohmann::json j{{"schema_version", EvaluationReport::kSchemaVersion},
                     {"mode", std::string(to_string(r.mode))},
                     {"per_model", models},
                     {"fid", nullptr},
                     {"api_mean_confidence", nullptr},
                     {"n_images", r.n_images},
                     {"far", r.far},
                     {"config_echo", attack_config_to_json(r.config_echo)},
                     {"unpaired", r.unpaired}};
    if (r.fid) j["fid"] = *r.fid;
    if (r.api_mean_confidence) j["api_mean_confidence"] = *r.api_mean_confidence;
    return j;
}

EvaluationReport report_from_json(const nlohmann::json& j) {
    try {
        if (j.at("schema_version").get<int>() != EvaluationReport::kSchemaVersion) {
            throw FormatError("unsupported report schema_version");
        }
        EvaluationReport r;
        r.mode = parse_attack_mode(j.at("mode").get<std::string>());
        for (const auto& m : j.at("per_model")) {
            r.per_model.push_back({m.at("model").get<std::string>(), m.at("asr").get<double>(),
                                   m.at("tau").get<double>(), m.at("in_ensemble").get<bool>()});
        }
        if (!j.at("fid").is_null()) r.fid = j.at("fid").get<double>();
        if (!j.at("api_mean_confidence").is_null()) r.api_mean_confidence = j.at("api_mean_confidence").get<double>();
        r.n_images = j.at("n_images").get<std::size_t>();
        r.far = j.at("far").get<double>();
        r.config_echo = attack_config_from_json(j.at("config_echo"), "config_echo");
        r.unpaired = j.at("unpaired").get<std::vector<std::string>>();
        r.validate();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed evaluation report: ") + e.what());
    }
}

void write_json_file(const nlohmann::json& j, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw IoError("cannot write " + tmp);
        out << j.dump(2) << '\n';
        if (!out) throw IoError("short write to " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

void save_report(const EvaluationReport& report, const std::filesystem::path& path) {
    write_json_file(report_to_json(report), path);
}

}  // namespace dualcloak
