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

#include "dualcloak/config.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <set>

#include "dualcloak/errors.hpp"

namespace dualcloak {

namespace {

using nlohmann::json;

[[noreturn]] void field_error(const std::string& field, const std::string& problem) {
    throw UsageError("config field '" + field + "': " + problem);
}

/// Walks one JSON object, remembering which keys were consumed so that any
/// leftover key can be reported.
class ObjectReader {
public:
    ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) field_error(path_.empty() ? "<root>" : path_, "expected an object");
    }

    std::string field(std::string_view key) const {
        return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
    }

    const json* find(std::string_view key) {
        seen_.insert(std::string(key));
        const auto it = j_.find(std::string(key));
        return it == j_.end() ? nullptr : &*it;
    }

    void number(std::string_view key, double& out) {
        if (const auto* v = find(key)) {
            if (!v->is_number()) field_error(field(key), "expected a number");
            out = v->get<double>();
        }
    }

    void optional_number(std::string_view key, std::optional<double>& out) {
        if (const auto* v = find(key)) {
            if (v->is_null()) {
                out.reset();
            } else if (v->is_number()) {
                out = v->get<double>();
            } else {
                field_error(field(key), "expected a number or null");
            }
        }
    }

    void integer(std::string_view key, int& out) {
        if (const auto* v = find(key)) {
            if (!v->is_number_integer()) field_error(field(key), "expected an integer");
            const auto x = v->get<long long>();
            if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
                field_error(field(key), "out of range");
            }
            out = static_cast<int>(x);
        }
    }

    void unsigned_integer(std::string_view key, std::uint64_t& out) {
        if (const auto* v = find(key)) {
            if (v->is_number_unsigned()) {
                out = v->get<std::uint64_t>();
            } else if (v->is_number_integer() && v->get<long long>() >= 0) {
                out = static_cast<std::uint64_t>(v->get<long long>());
            } else {
                field_error(field(key), "expected a non-negative integer");
            }
        }
    }

    void boolean(std::string_view key, bool& out) {
        if (const auto* v = find(key)) {
            if (!v->is_boolean()) field_error(field(key), "expected true or false");
            out = v->get<bool>();
        }
    }

    void string(std::string_view key, std::string& out) {
        if (const auto* v = find(key)) {
            if (!v->is_string()) field_error(field(key), "expected a string");
            out = v->get<std::string>();
        }
    }

    void path(std::string_view key, std::filesystem::path& out, const std::filesystem::path& base) {
        std::string text;
        string(key, text);
        if (find(key) == nullptr) return;
        if (text.empty()) {
            out.clear();
            return;
        }
        std::filesystem::path p(text);
        out = (p.is_relative() && !base.empty() ? base / p : p).lexically_normal();
    }

    void string_list(std::string_view key, std::vector<std::string>& out) {
        if (const auto* v = find(key)) {
            if (!v->is_array()) field_error(field(key), "expected an array of strings");
            std::vector<std::string> items;
            for (const auto& item : *v) {
                if (!item.is_string()) field_error(field(key), "expected an array of strings");
                items.push_back(item.get<std::string>());
            }
            out = std::move(items);
        }
    }

    /// Rejects keys that were never asked for.
    void finish() const {
        for (const auto& [key, _] : j_.items()) {
            if (!seen_.contains(key)) field_error(field(key), "unknown key");
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

std::string path_string(const std::filesystem::path& p) { return p.generic_string(); }

}  // namespace

void RunConfig::require_disjoint_holdout() const {
    if (std::find(ensemble.begin(), ensemble.end(), holdout) != ensemble.end()) {
        throw UsageError("config field 'holdout': model '" + holdout + "' is also in the attack ensemble");
    }
}

json attack_config_to_json(const AttackConfig& c) {
    return {{"epsilon", c.epsilon},
            {"epsilon_iter", c.epsilon_iter},
            {"off_steps", c.off_steps},
            {"eta", c.eta},
            {"eta_iter", c.eta_iter},
            {"n_latent_steps", c.n_latent_steps},
            {"gamma", c.gamma},
            {"blur", {{"kernel_size", c.blur.kernel_size}, {"sigma", c.blur.sigma}}},
            {"mode", std::string(to_string(c.mode))},
            {"composition", std::string(to_string(c.composition))},
            {"untargeted", c.untargeted}};
}

AttackConfig attack_config_from_json(const json& j, const std::string& prefix) {
    AttackConfig c;
    ObjectReader r(j, prefix);
    r.number("epsilon", c.epsilon);
    r.number("epsilon_iter", c.epsilon_iter);
    r.integer("off_steps", c.off_steps);
    r.number("eta", c.eta);
    r.number("eta_iter", c.eta_iter);
    r.integer("n_latent_steps", c.n_latent_steps);
    r.number("gamma", c.gamma);
    if (const auto* blur = r.find("blur")) {
        ObjectReader b(*blur, r.field("blur"));
        b.integer("kernel_size", c.blur.kernel_size);
        b.number("sigma", c.blur.sigma);
        b.finish();
    }
    std::string mode(to_string(c.mode));
    r.string("mode", mode);
    try {
        c.mode = parse_attack_mode(mode);
    } catch (const ParameterError& e) {
        field_error(r.field("mode"), e.what());
    }
    std::string composition(to_string(c.composition));
    r.string("composition", composition);
    try {
        c.composition = parse_composition(composition);
    } catch (const ParameterError& e) {
        field_error(r.field("composition"), e.what());
    }
    r.boolean("untargeted", c.untargeted);
    r.finish();
    try {
        c.validate();
    } catch (const ParameterError& e) {
        throw UsageError(std::string("config: ") + e.what());
    }
    return c;
}

json config_to_json(const RunConfig& c) {
    json attribute{{"name", c.attribute.name}, {"file", path_string(c.attribute.file)}, {"strength", nullptr}};
    if (c.attribute.strength) attribute["strength"] = *c.attribute.strength;
    const auto& e = c.evaluation;
    return {{"schema_version", RunConfig::kSchemaVersion},
            {"attack", attack_config_to_json(c.attack)},
            {"ensemble", c.ensemble},
            {"holdout", c.holdout},
            {"generator", c.generator},
            {"attribute", attribute},
            {"parser", {{"name", c.parser.name}, {"annotations", path_string(c.parser.annotations)}}},
            {"target_image", path_string(c.target_image)},
            {"io", {{"input", path_string(c.io.input)}, {"output", path_string(c.io.output)}}},
            {"seed", c.seed},
            {"workers", c.workers},
            {"evaluation",
             {{"far", e.far},
              {"thresholds", path_string(e.thresholds)},
              {"synthetic_impostor_pairs", e.synthetic_impostor_pairs},
              {"api_endpoint", e.api_endpoint},
              {"api_timeout_s", e.api_timeout_s},
              {"api_retries", e.api_retries},
              {"api_parallelism", e.api_parallelism},
              {"fid_dim", e.fid_dim}}}};
}

RunConfig config_from_json(const json& j, const std::filesystem::path& base_dir) {
    RunConfig c;
    ObjectReader r(j, "");
    const auto* version = r.find("schema_version");
    if (version == nullptr) field_error("schema_version", "missing");
    if (!version->is_number_integer() || version->get<long long>() != RunConfig::kSchemaVersion) {
        field_error("schema_version", "unsupported version (expected " + std::to_string(RunConfig::kSchemaVersion) + ")");
    }
    if (const auto* attack = r.find("attack")) c.attack = attack_config_from_json(*attack, "attack");
    r.string_list("ensemble", c.ensemble);
    if (c.ensemble.empty()) field_error("ensemble", "must name at least one embedder");
    r.string("holdout", c.holdout);
    r.string("generator", c.generator);
    if (const auto* attr = r.find("attribute")) {
        ObjectReader a(*attr, "attribute");
        a.string("name", c.attribute.name);
        a.path("file", c.attribute.file, base_dir);
        a.optional_number("strength", c.attribute.strength);
        a.finish();
    }
    if (const auto* parser = r.find("parser")) {
        ObjectReader p(*parser, "parser");
        p.string("name", c.parser.name);
        p.path("annotations", c.parser.annotations, base_dir);
        p.finish();
    }
    r.path("target_image", c.target_image, base_dir);
    if (const auto* io = r.find("io")) {
        ObjectReader i(*io, "io");
        i.path("input", c.io.input, base_dir);
        i.path("output", c.io.output, base_dir);
        i.finish();
    }
    r.unsigned_integer("seed", c.seed);
    r.integer("workers", c.workers);
    if (c.workers < 0) field_error("workers", "must be >= 0");
    if (const auto* eval = r.find("evaluation")) {
        auto& e = c.evaluation;
        ObjectReader v(*eval, "evaluation");
        v.number("far", e.far);
        v.path("thresholds", e.thresholds, base_dir);
        v.integer("synthetic_impostor_pairs", e.synthetic_impostor_pairs);
        v.string("api_endpoint", e.api_endpoint);
        v.number("api_timeout_s", e.api_timeout_s);
        v.integer("api_retries", e.api_retries);
        v.integer("api_parallelism", e.api_parallelism);
        v.integer("fid_dim", e.fid_dim);
        v.finish();
        if (!(e.far > 0.0 && e.far <= 1.0)) field_error("evaluation.far", "must lie in (0, 1]");
        if (e.synthetic_impostor_pairs < 1) field_error("evaluation.synthetic_impostor_pairs", "must be >= 1");
        if (!(e.api_timeout_s > 0.0)) field_error("evaluation.api_timeout_s", "must be > 0");
        if (e.api_retries < 0) field_error("evaluation.api_retries", "must be >= 0");
        if (e.api_parallelism < 1) field_error("evaluation.api_parallelism", "must be >= 1");
        if (e.fid_dim < 1) field_error("evaluation.fid_dim", "must be >= 1");
    }
    r.finish();
    return c;
}

void apply_override(json& root, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0) {
        throw UsageError("override '" + std::string(assignment) + "' is not of the form dotted.path=value");
    }
    const std::string key(assignment.substr(0, eq));
    const std::string text(assignment.substr(eq + 1));
    json value = json::parse(text, nullptr, /*allow_exceptions=*/false);
    if (value.is_discarded()) value = text;

    json* node = &root;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) throw UsageError("override key '" + key + "' has an empty segment");
        if (!node->is_object()) throw UsageError("override key '" + key + "' descends into a non-object");
        if (dot == std::string::npos) {
            (*node)[part] = std::move(value);
            return;
        }
        if (!node->contains(part)) (*node)[part] = json::object();
        node = &(*node)[part];
        start = dot + 1;
    }
}

RunConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read config file " + path.string());
    json j = json::parse(in, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded()) throw UsageError("config file " + path.string() + " is not valid JSON");
    for (const auto& o : overrides) apply_override(j, o);
    return config_from_json(j, std::filesystem::absolute(path).parent_path());
}

}  // namespace dualcloak
