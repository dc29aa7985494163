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

// Command-line entry point: protect, calibrate, evaluate, mask-preview, grid.

#include <iostream>

#include "CLI11.hpp"
#include "dualcloak/commands.hpp"
#include "dualcloak/errors.hpp"

namespace {

void add_common(CLI::App& cmd, dualcloak::CommonOptions& opts, bool with_mode) {
    cmd.add_option("--config", opts.config, "Run configuration (JSON)")->required();
    cmd.add_option("--set", opts.overrides, "Override a config field: dotted.path=value (repeatable)");
    if (with_mode) {
        cmd.add_option("--mode", opts.mode, "pgd, tma, ftm, age, age-tma or age-ftm")
            ->check(CLI::IsMember({"pgd", "tma", "ftm", "age", "age-tma", "age-ftm"}));
    }
    cmd.add_option("--seed", opts.seed, "Master seed");
    cmd.add_option("--workers", opts.workers, "Worker threads (0 = one per core)")->check(CLI::NonNegativeNumber);
}

}  // namespace

int main(int argc, char** argv) {
    using namespace dualcloak;
    CLI::App app{"dualcloak: face privacy protection against face recognition"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(DUALCLOAK_VERSION));

    CommonOptions common;

    auto* protect = app.add_subcommand("protect", "Protect every input image");
    add_common(*protect, common, true);

    auto* calibrate = app.add_subcommand("calibrate", "Calibrate verification thresholds at the configured FAR");
    add_common(*calibrate, common, false);
    std::filesystem::path pairs_list, calibrate_out;
    calibrate->add_option("--pairs", pairs_list, "Impostor pair list, one 'a.png b.png' per line");
    calibrate->add_option("--out", calibrate_out, "Thresholds JSON (default: io.output/thresholds.json)");

    auto* evaluate = app.add_subcommand("evaluate", "Score protected images against their targets");
    add_common(*evaluate, common, true);
    EvaluateOptions eval;
    evaluate->add_option("--protected", eval.protected_dir, "Directory of protected NAME.png")->required();
    evaluate->add_option("--targets", eval.targets_dir, "Directory of target NAME.png")->required();
    evaluate->add_option("--out", eval.out, "Report JSON (default: io.output/report.json)");
    evaluate->add_flag("--api", eval.api, "Also query the verification service");
    evaluate->add_flag("--allow-partial", eval.allow_partial, "Exit 0 even when some files are unpaired");

    auto* preview = app.add_subcommand("mask-preview", "Write texture, hair and combined masks for one image");
    add_common(*preview, common, false);
    std::filesystem::path preview_image, preview_out;
    preview->add_option("image", preview_image, "Input image")->required()->check(CLI::ExistingFile);
    preview->add_option("--out", preview_out, "Output directory (default: io.output)");

    auto* grid = app.add_subcommand("grid", "Tile image directories into a labelled comparison grid");
    std::vector<std::string> row_specs;
    std::filesystem::path grid_out;
    int limit = 8;
    grid->add_option("--row", row_specs, "LABEL=DIRECTORY (repeatable, top to bottom)")->required();
    grid->add_option("--out", grid_out, "Output PNG")->required();
    grid->add_option("--limit", limit, "Images per row")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_code::ok : exit_code::usage;
    }

    try {
        if (*protect) return cmd_protect(common, std::cerr);
        if (*calibrate) return cmd_calibrate(common, pairs_list, calibrate_out, std::cerr);
        if (*evaluate) return cmd_evaluate(common, eval, std::cerr);
        if (*preview) return cmd_mask_preview(common, preview_image, preview_out, std::cerr);
        if (*grid) {
            std::vector<std::pair<std::string, std::filesystem::path>> rows;
            for (const auto& spec : row_specs) {
                const auto eq = spec.find('=');
                if (eq == std::string::npos) throw UsageError("--row expects LABEL=DIRECTORY, got '" + spec + "'");
                rows.emplace_back(spec.substr(0, eq), spec.substr(eq + 1));
            }
            return cmd_grid(rows, grid_out, limit, std::cerr);
        }
    } catch (const UsageError& e) {
        std::cerr << "dualcloak: " << e.what() << '\n';
        return exit_code::usage;
    } catch (const std::exception& e) {
        std::cerr << "dualcloak: error: " << e.what() << '\n';
        return exit_code::partial;
    }
    return exit_code::usage;
}
