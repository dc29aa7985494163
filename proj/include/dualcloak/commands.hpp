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
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "dualcloak/config.hpp"

namespace dualcloak {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int partial = 1;
inline constexpr int usage = 2;
}  // namespace exit_code

/// Flags shared by the config-driven commands. Each flag overrides the
/// matching config field.
struct CommonOptions {
    std::filesystem::path config;
    /// "dotted.path=value" assignments, applied in order.
    std::vector<std::string> overrides;
    std::optional<std::string> mode;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
};

RunConfig resolve_config(const CommonOptions& options);

/// Attacks every input image and writes NAME.png, NAME.age.png (latent
/// modes), NAME.mask.png (masked modes), manifest.json and timings.json.
int cmd_protect(const CommonOptions& options, std::ostream& log);

/// Calibrates tau for the ensemble and holdout models. `pairs_list` holds one
/// "image_a image_b" pair per line (relative to the list file); when empty,
/// synthetic impostor pairs are generated. Writes {model: {tau, far, n_pairs}}.
int cmd_calibrate(const CommonOptions& options, const std::filesystem::path& pairs_list,
                  const std::filesystem::path& out, std::ostream& log);

struct EvaluateOptions {
    std::filesystem::path protected_dir;
    std::filesystem::path targets_dir;
    std::filesystem::path out;
    bool api = false;
    bool allow_partial = false;
};

/// Pairs protected/NAME.png with targets/NAME.png and writes the report.
int cmd_evaluate(const CommonOptions& options, const EvaluateOptions& evaluate, std::ostream& log);

/// Writes NAME.texture.png, NAME.hair.png, NAME.ftm.png and NAME.overlay.png.
int cmd_mask_preview(const CommonOptions& options, const std::filesystem::path& image,
                     const std::filesystem::path& out_dir, std::ostream& log);

/// One row per (label, directory) with up to `limit` images, sorted by name.
int cmd_grid(const std::vector<std::pair<std::string, std::filesystem::path>>& rows,
             const std::filesystem::path& out, int limit, std::ostream& log);

/// .png/.jpg/.jpeg files of a directory sorted by name, or the file itself.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& file_or_dir);

/// Runs job(i) for i in [0, n) on up to `workers` threads (0 = one per
/// core). The first exception is rethrown after all threads finish.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& job);

}  // namespace dualcloak
