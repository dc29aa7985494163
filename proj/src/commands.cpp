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

#include "dualcloak/commands.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "dualcloak/errors.hpp"
#include "dualcloak/grid.hpp"
#include "dualcloak/metrics.hpp"
#include "dualcloak/random.hpp"
#include "dualcloak/report.hpp"
#include "dualcloak/synthetic.hpp"
#include "dualcloak/verification_service.hpp"
#include "dualcloak/zoo.hpp"

#ifndef DUALCLOAK_VERSION
#define DUALCLOAK_VERSION "dev"
#endif

namespace dualcloak {

namespace {

using nlohmann::json;

bool is_image_file(const std::filesystem::path& p) {
    auto ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

/// NAME.age.png and NAME.mask.png are side outputs of protect, not images to score.
bool is_side_output(const std::filesystem::path& p) {
    const auto stem = p.stem().string();
    return stem.ends_with(".age") || stem.ends_with(".mask");
}

int effective_workers(int requested) {
    if (requested > 0) return requested;
    return std::max(1u, std::thread::hardware_concurrency());
}

struct AttackSetup {
    EmbedderEnsemble ensemble;
    GeneratorPtr generator;
    std::optional<AttributeDirection> attribute;
    std::shared_ptr<const FaceParser> parser;

    bool concurrent_safe() const {
        return ensemble.concurrent_safe() && (!generator || generator->concurrent_safe()) &&
               (!parser || parser->concurrent_safe());
    }
};

AttributeDirection resolve_attribute(const RunConfig& cfg, ModelZoo& zoo) {
    auto attr = cfg.attribute.file.empty() ? zoo.attribute(cfg.generator, cfg.attribute.name)
                                           : load_attribute(cfg.attribute.file);
    if (cfg.attribute.strength) attr.strength = *cfg.attribute.strength;
    return attr;
}

AttackSetup build_setup(const RunConfig& cfg, ModelZoo& zoo) {
    AttackSetup s{zoo.ensemble(cfg.ensemble), nullptr, std::nullopt, nullptr};
    const AttackMode mode = cfg.attack.mode;
    if (uses_generator(mode)) {
        s.generator = zoo.generator(cfg.generator);
        s.attribute = resolve_attribute(cfg, zoo);
    }
    if (uses_parser(mode)) {
        if (cfg.parser.annotations.empty()) {
            throw UsageError("config field 'parser.annotations': required for mode " + std::string(to_string(mode)));
        }
        s.parser = make_parser(cfg.parser.name, cfg.parser.annotations);
    }
    return s;
}

json artifact_versions(const RunConfig& cfg) {
    const auto builtin_embedders = std::vector<std::string>{"toylinear", "toyconv-1", "toyconv-2", "toyconv-3",
                                                            "toyconv-4"};
    auto version_of = [&](const std::string& name, bool is_generator) {
        const bool builtin = is_generator ? (name == "toy-identity" || name == "toy-decoder")
                                          : std::find(builtin_embedders.begin(), builtin_embedders.end(), name) !=
                                                builtin_embedders.end();
        return builtin ? std::string("builtin.v1") : std::string("registered");
    };
    json out = json::object();
    for (const auto& n : cfg.ensemble) out[n] = version_of(n, false);
    out[cfg.holdout] = version_of(cfg.holdout, false);
    if (uses_generator(cfg.attack.mode)) out[cfg.generator] = version_of(cfg.generator, true);
    return out;
}

struct ImageOutcome {
    std::string name;
    std::uint64_t seed = 0;
    std::string status = "error";
    std::vector<std::string> warnings;
    std::string error;
    std::vector<double> loss_trace;
    std::vector<std::string> files;
    double seconds = 0.0;
};

std::map<std::string, VerificationThreshold> read_thresholds(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read thresholds file " + path.string());
    const auto j = json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw UsageError(path.string() + " is not a thresholds JSON object");
    std::map<std::string, VerificationThreshold> out;
    for (const auto& [model, entry] : j.items()) {
        if (!entry.is_object() || !entry.contains("tau") || !entry.contains("far")) {
            throw UsageError(path.string() + ": entry '" + model + "' lacks tau/far");
        }
        out[model] = {entry.at("tau").get<double>(), entry.at("far").get<double>()};
    }
    return out;
}

std::vector<double> score_pairs(const FaceEmbedder& model, const std::vector<ImpostorPair>& pairs) {
    std::vector<double> scores;
    scores.reserve(pairs.size());
    for (const auto& p : pairs) scores.push_back(cosine_similarity(embed(model, p.a), embed(model, p.b)));
    return scores;
}

std::vector<ImpostorPair> synthetic_impostors(const RunConfig& cfg) {
    return make_impostor_pairs(make_identities(30, kEvalIdentitySeed), cfg.evaluation.synthetic_impostor_pairs,
                               derive_seed(cfg.seed, "impostor-pairs"));
}

std::vector<ImpostorPair> read_pairs_list(const std::filesystem::path& list) {
    std::ifstream in(list);
    if (!in) throw UsageError("cannot read pairs list " + list.string());
    const auto base = std::filesystem::absolute(list).parent_path();
    std::vector<ImpostorPair> pairs;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream fields(line);
        std::string a, b, extra;
        if (!(fields >> a) || a.starts_with('#')) continue;
        if (!(fields >> b) || (fields >> extra)) {
            throw UsageError(list.string() + ":" + std::to_string(line_no) + ": expected two image paths");
        }
        auto resolve = [&](const std::string& p) {
            std::filesystem::path path(p);
            return path.is_relative() ? base / path : path;
        };
        pairs.push_back({load_image(resolve(a)), load_image(resolve(b))});
    }
    return pairs;
}

ImageTensor red_overlay(const ImageTensor& image, const BinaryMask& mask) {
    const Shape s = image.shape();
    std::vector<double> out(static_cast<std::size_t>(s.pixels()) * 3);
    const auto v = image.values();
    for (std::size_t p = 0; p < static_cast<std::size_t>(s.pixels()); ++p) {
        for (int c = 0; c < 3; ++c) {
            const double px = v[p * s.channels + (s.channels == 3 ? c : 0)];
            const double red = c == 0 ? 1.0 : 0.0;
            out[p * 3 + c] = mask.bits[p] ? 0.5 * px + 0.5 * red : px;
        }
    }
    return ImageTensor({s.height, s.width, 3}, std::move(out));
}

}  // namespace

std::vector<std::filesystem::path> list_images(const std::filesystem::path& file_or_dir) {
    if (std::filesystem::is_regular_file(file_or_dir)) return {file_or_dir};
    if (!std::filesystem::is_directory(file_or_dir)) {
        throw NotFoundError("no such image file or directory: " + file_or_dir.string());
    }
    std::vector<std::filesystem::path> out;
    for (const auto& entry : std::filesystem::directory_iterator(file_or_dir)) {
        if (entry.is_regular_file() && is_image_file(entry.path())) out.push_back(entry.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& job) {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto run = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                job(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    {
        const auto threads = std::min<std::size_t>(static_cast<std::size_t>(effective_workers(workers)), n);
        std::vector<std::jthread> pool;
        for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(run);
        run();
    }
    if (failure) std::rethrow_exception(failure);
}

RunConfig resolve_config(const CommonOptions& options) {
    if (options.config.empty()) throw UsageError("--config is required");
    auto overrides = options.overrides;
    if (options.mode) overrides.push_back("attack.mode=\"" + *options.mode + "\"");
    if (options.seed) overrides.push_back("seed=" + std::to_string(*options.seed));
    if (options.workers) overrides.push_back("workers=" + std::to_string(*options.workers));
    return load_config(options.config, overrides);
}

int cmd_protect(const CommonOptions& options, std::ostream& log) {
    const RunConfig cfg = resolve_config(options);
    if (cfg.io.input.empty()) throw UsageError("config field 'io.input': required by protect");
    if (cfg.io.output.empty()) throw UsageError("config field 'io.output': required by protect");
    if (cfg.target_image.empty()) throw UsageError("config field 'target_image': required by protect");
    std::vector<std::filesystem::path> inputs;
    try {
        inputs = list_images(cfg.io.input);
    } catch (const NotFoundError& e) {
        throw UsageError(e.what());
    }
    if (inputs.empty()) throw UsageError("no input images in " + cfg.io.input.string());
    // A directory of targets pairs targets/NAME.png with each input NAME.
    const bool per_image_targets = std::filesystem::is_directory(cfg.target_image);
    std::optional<ImageTensor> shared_target;
    if (!per_image_targets) shared_target = load_image(cfg.target_image);

    ModelZoo zoo;
    const AttackSetup setup = build_setup(cfg, zoo);
    std::filesystem::create_directories(cfg.io.output);

    std::vector<ImageOutcome> outcomes(inputs.size());
    std::mutex log_mutex;
    const int workers = setup.concurrent_safe() ? cfg.workers : 1;
    const auto started = std::chrono::steady_clock::now();
    parallel_for(inputs.size(), workers, [&](std::size_t i) {
        const auto& path = inputs[i];
        auto& out = outcomes[i];
        out.name = path.stem().string();
        out.seed = derive_seed(cfg.seed, path.filename().string());
        const auto t0 = std::chrono::steady_clock::now();
        try {
            const ImageTensor image = load_image(path);
            const ImageTensor target =
                per_image_targets ? load_image(cfg.target_image / path.filename()) : *shared_target;
            AttackContext context{setup.generator.get(), setup.attribute ? &*setup.attribute : nullptr,
                                  setup.parser.get(), out.name};
            const auto result = run_attack(image, target, setup.ensemble, context, cfg.attack);
            const auto file = out.name + ".png";
            save_image(result.protected_image, cfg.io.output / file);
            out.files.push_back(file);
            if (result.intermediate_on_manifold) {
                save_image(*result.intermediate_on_manifold, cfg.io.output / (out.name + ".age.png"));
                out.files.push_back(out.name + ".age.png");
            }
            if (result.mask_used && cfg.attack.mode != AttackMode::pgd) {
                save_mask(*result.mask_used, cfg.io.output / (out.name + ".mask.png"));
                out.files.push_back(out.name + ".mask.png");
            }
            out.loss_trace = result.loss_trace;
            out.warnings = result.warnings;
            out.status = result.status == AttackStatus::ok ? "ok" : "warning";
        } catch (const std::exception& e) {
            out.status = "error";
            out.error = e.what();
        }
        out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::lock_guard lock(log_mutex);
        log << "protect: " << out.name << " " << out.status << (out.error.empty() ? "" : ": " + out.error) << '\n';
    });
    const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    json images = json::array();
    json timings = json::object();
    int failures = 0;
    for (const auto& o : outcomes) {
        json entry{{"name", o.name},   {"seed", o.seed},       {"status", o.status},
                   {"files", o.files}, {"warnings", o.warnings}, {"loss_trace", o.loss_trace}};
        if (!o.error.empty()) entry["error"] = o.error;
        images.push_back(std::move(entry));
        timings[o.name] = o.seconds;
        failures += o.status == "error" ? 1 : 0;
    }
    json models{{"ensemble", cfg.ensemble}, {"artifacts", artifact_versions(cfg)}};
    if (setup.attribute) {
        models["generator"] = cfg.generator;
        models["attribute"] = {{"name", setup.attribute->name},
                               {"dim", setup.attribute->dim()},
                               {"strength", setup.attribute->strength}};
    }
    const json manifest{{"schema_version", 1},
                        {"tool", {{"name", "dualcloak"}, {"version", DUALCLOAK_VERSION}}},
                        {"command", "protect"},
                        {"mode", std::string(to_string(cfg.attack.mode))},
                        {"seed", cfg.seed},
                        {"config", config_to_json(cfg)},
                        {"models", models},
                        {"images", images},
                        {"failures", failures}};
    write_json_file(manifest, cfg.io.output / "manifest.json");
    write_json_file({{"total_seconds", total}, {"images", timings}}, cfg.io.output / "timings.json");
    log << "protect: " << (inputs.size() - static_cast<std::size_t>(failures)) << "/" << inputs.size()
        << " images written to " << cfg.io.output.string() << '\n';
    return failures == 0 ? exit_code::ok : exit_code::partial;
}

int cmd_calibrate(const CommonOptions& options, const std::filesystem::path& pairs_list,
                  const std::filesystem::path& out, std::ostream& log) {
    const RunConfig cfg = resolve_config(options);
    const double far = cfg.evaluation.far;
    const auto pairs = pairs_list.empty() ? synthetic_impostors(cfg) : read_pairs_list(pairs_list);
    if (pairs.empty()) throw UsageError("no impostor pairs to calibrate on");

    std::vector<std::string> models = cfg.ensemble;
    if (std::find(models.begin(), models.end(), cfg.holdout) == models.end()) models.push_back(cfg.holdout);

    ModelZoo zoo;
    json result = json::object();
    for (const auto& name : models) {
        const auto scores = score_pairs(*zoo.embedder(name), pairs);
        const auto thr = calibrate_threshold(scores, far);
        json entry{{"tau", thr.tau}, {"far", thr.far}, {"n_pairs", pairs.size()}};
        if (static_cast<double>(pairs.size()) < 1.0 / far) {
            entry["warning"] = "fewer than 1/far pairs; tau is interpolated between the extreme scores";
            log << "calibrate: warning: " << name << " has only " << pairs.size() << " pairs for far " << far
                << '\n';
        }
        log << "calibrate: " << name << " tau=" << thr.tau << '\n';
        result[name] = std::move(entry);
    }
    const auto target = out.empty() ? (cfg.io.output.empty() ? std::filesystem::path("thresholds.json")
                                                             : cfg.io.output / "thresholds.json")
                                    : out;
    write_json_file(result, target);
    return exit_code::ok;
}

int cmd_evaluate(const CommonOptions& options, const EvaluateOptions& ev, std::ostream& log) {
    const RunConfig cfg = resolve_config(options);
    cfg.require_disjoint_holdout();
    if (!std::filesystem::is_directory(ev.protected_dir)) {
        throw UsageError("protected directory " + ev.protected_dir.string() + " does not exist");
    }
    if (!std::filesystem::is_directory(ev.targets_dir)) {
        throw UsageError("targets directory " + ev.targets_dir.string() + " does not exist");
    }

    auto stems_of = [](const std::filesystem::path& dir) {
        std::map<std::string, std::filesystem::path> out;
        for (const auto& p : list_images(dir)) {
            if (!is_side_output(p)) out.emplace(p.stem().string(), p);
        }
        return out;
    };
    const auto protected_files = stems_of(ev.protected_dir);
    if (protected_files.empty()) throw UsageError("no protected images in " + ev.protected_dir.string());
    const auto target_files = stems_of(ev.targets_dir);

    std::vector<std::string> names;
    std::vector<std::string> unpaired;
    for (const auto& [stem, path] : protected_files) {
        if (target_files.contains(stem)) {
            names.push_back(stem);
        } else {
            unpaired.push_back(path.filename().string());
        }
    }
    for (const auto& [stem, path] : target_files) {
        if (!protected_files.contains(stem)) unpaired.push_back(path.filename().string());
    }
    std::sort(unpaired.begin(), unpaired.end());
    for (const auto& u : unpaired) log << "evaluate: unpaired " << u << '\n';
    if (names.empty()) throw UsageError("no protected image has a matching target");

    std::vector<ImageTensor> protected_images, targets;
    for (const auto& n : names) {
        protected_images.push_back(load_image(protected_files.at(n)));
        targets.push_back(load_image(target_files.at(n)));
    }

    ModelZoo zoo;
    std::map<std::string, VerificationThreshold> thresholds;
    if (!cfg.evaluation.thresholds.empty()) thresholds = read_thresholds(cfg.evaluation.thresholds);
    std::vector<ImpostorPair> impostors;
    auto threshold_for = [&](const std::string& model, const FaceEmbedder& embedder) {
        if (!cfg.evaluation.thresholds.empty()) {
            const auto it = thresholds.find(model);
            if (it == thresholds.end()) {
                throw UsageError("thresholds file has no entry for model '" + model + "'");
            }
            return it->second;
        }
        if (impostors.empty()) impostors = synthetic_impostors(cfg);
        return calibrate_threshold(score_pairs(embedder, impostors), cfg.evaluation.far);
    };

    EvaluationReport report;
    report.mode = cfg.attack.mode;
    report.config_echo = cfg.attack;
    report.far = cfg.evaluation.far;
    report.n_images = names.size();
    report.unpaired = unpaired;
    std::vector<std::pair<std::string, bool>> models{{cfg.holdout, false}};
    for (const auto& m : cfg.ensemble) models.emplace_back(m, true);
    for (const auto& [name, in_ensemble] : models) {
        const auto model = zoo.embedder(name);
        const auto thr = threshold_for(name, *model);
        const double asr = attack_success_rate(protected_images, targets, *model, thr);
        log << "evaluate: " << name << (in_ensemble ? " (ensemble)" : " (holdout)") << " asr=" << asr
            << " tau=" << thr.tau << '\n';
        report.per_model.push_back({name, asr, thr.tau, in_ensemble});
    }

    if (!cfg.io.input.empty() && std::filesystem::exists(cfg.io.input)) {
        std::vector<ImageTensor> clean, matched;
        for (const auto& p : list_images(cfg.io.input)) {
            const auto it = std::find(names.begin(), names.end(), p.stem().string());
            if (it == names.end()) continue;
            clean.push_back(load_image(p));
            matched.push_back(protected_images[static_cast<std::size_t>(it - names.begin())]);
        }
        if (!clean.empty()) {
            const RandomProjectionExtractor extractor({32, 32, 3}, static_cast<std::size_t>(cfg.evaluation.fid_dim),
                                                      derive_seed(cfg.seed, "fid-features"));
            report.fid = fid(extract_features(extractor, matched), extract_features(extractor, clean));
            log << "evaluate: fid=" << *report.fid << '\n';
        }
    }

    if (ev.api) {
        std::vector<std::pair<ImageTensor, ImageTensor>> pairs;
        for (std::size_t i = 0; i < names.size(); ++i) pairs.emplace_back(protected_images[i], targets[i]);
        HttpClientOptions client_options{cfg.evaluation.api_timeout_s, cfg.evaluation.api_retries};
        std::optional<MockVerificationServer> mock;
        std::string endpoint = cfg.evaluation.api_endpoint;
        if (endpoint.empty()) {
            mock.emplace(zoo.embedder(cfg.holdout));
            mock->start();
            endpoint = mock->url();
        }
        const HttpVerificationClient client(endpoint, client_options);
        report.api_mean_confidence = mean_api_confidence(client, pairs, cfg.evaluation.api_parallelism);
        log << "evaluate: api mean confidence=" << *report.api_mean_confidence << '\n';
    }

    const auto out = ev.out.empty() ? (cfg.io.output.empty() ? std::filesystem::path("report.json")
                                                             : cfg.io.output / "report.json")
                                    : ev.out;
    save_report(report, out);
    if (!unpaired.empty() && !ev.allow_partial) return exit_code::partial;
    return exit_code::ok;
}

int cmd_mask_preview(const CommonOptions& options, const std::filesystem::path& image_path,
                     const std::filesystem::path& out_dir, std::ostream& log) {
    const RunConfig cfg = resolve_config(options);
    if (cfg.parser.annotations.empty()) throw UsageError("config field 'parser.annotations': required by mask-preview");
    const auto image = load_image(image_path);
    const auto name = image_path.stem().string();
    const auto parser = make_parser(cfg.parser.name, cfg.parser.annotations);
    const auto& vocabulary = parser->label_set();

    const auto texture = texture_mask(image, cfg.attack.gamma, cfg.attack.blur);
    const auto hair = hair_mask(parse_face(*parser, image, name), vocabulary.hair_label, vocabulary);
    const auto combined = combine_masks(texture, hair);

    const auto dir = out_dir.empty() ? (cfg.io.output.empty() ? std::filesystem::path(".") : cfg.io.output) : out_dir;
    std::filesystem::create_directories(dir);
    save_mask(texture, dir / (name + ".texture.png"));
    save_mask(hair, dir / (name + ".hair.png"));
    save_mask(combined, dir / (name + ".ftm.png"));
    save_image(red_overlay(image, combined), dir / (name + ".overlay.png"));
    log << "mask-preview: " << name << " texture=" << texture.popcount() << " hair=" << hair.popcount()
        << " ftm=" << combined.popcount() << " of " << combined.pixels() << " pixels\n";
    return exit_code::ok;
}

int cmd_grid(const std::vector<std::pair<std::string, std::filesystem::path>>& rows, const std::filesystem::path& out,
             int limit, std::ostream& log) {
    if (rows.empty()) throw UsageError("grid needs at least one --row");
    if (out.empty()) throw UsageError("grid needs --out");
    if (limit < 1) throw UsageError("--limit must be >= 1");
    std::vector<GridRow> grid_rows;
    for (const auto& [label, dir] : rows) {
        std::vector<std::filesystem::path> files;
        try {
            files = list_images(dir);
        } catch (const NotFoundError& e) {
            throw UsageError(e.what());
        }
        std::erase_if(files, is_side_output);
        if (files.size() > static_cast<std::size_t>(limit)) files.resize(static_cast<std::size_t>(limit));
        GridRow row{label, {}};
        for (const auto& f : files) row.images.push_back(load_image(f));
        grid_rows.push_back(std::move(row));
    }
    const auto grid = comparison_grid(grid_rows);
    if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path());
    save_image(grid, out);
    log << "grid: wrote " << out.string() << " (" << to_string(grid.shape()) << ")\n";
    return exit_code::ok;
}

}  // namespace dualcloak
