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

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dualcloak/embedding.hpp"
#include "dualcloak/image.hpp"
#include "dualcloak/manifold.hpp"
#include "dualcloak/texture.hpp"

namespace dualcloak {

enum class AttackMode { pgd, tma, ftm, age, age_tma, age_ftm };

/// "pgd", "tma", "ftm", "age", "age-tma", "age-ftm".
std::string_view to_string(AttackMode mode);
/// Inverse of to_string; ParameterError for anything else.
AttackMode parse_attack_mode(std::string_view text);
const std::vector<AttackMode>& all_attack_modes();

bool uses_generator(AttackMode mode);
bool uses_parser(AttackMode mode);

/// How age-tma / age-ftm combine the latent and pixel stages.
enum class Composition {
    /// AGE to completion, then a masked pixel attack on its output.
    sequential,
    /// One latent step then one pixel step per iteration, with the mask
    /// recomputed on the current on-manifold image.
    joint,
};

std::string_view to_string(Composition composition);
Composition parse_composition(std::string_view text);

struct AttackConfig {
    double epsilon = 16.0 / 255.0;
    double epsilon_iter = 2.0 / 255.0;
    int off_steps = 50;
    double eta = 0.1;
    double eta_iter = 0.02;
    int n_latent_steps = 10;
    double gamma = 0.003;
    BlurParams blur{};
    AttackMode mode = AttackMode::age_ftm;
    Composition composition = Composition::sequential;
    /// Push away from the source identity instead of towards the target.
    bool untargeted = false;

    /// Throws ParameterError naming the offending field.
    void validate() const;

    friend bool operator==(const AttackConfig&, const AttackConfig&) = default;
};

enum class AttackStatus { ok, warning };

struct AttackResult {
    AttackResult(ImageTensor image, AttackMode executed) : protected_image(std::move(image)), mode(executed) {}

    ImageTensor protected_image;
    /// x_AGE for the latent modes.
    std::optional<ImageTensor> intermediate_on_manifold;
    /// The pixel-stage mask (all ones for pgd).
    std::optional<BinaryMask> mask_used;
    /// Objective before the first step and after every step.
    std::vector<double> loss_trace;
    AttackMode mode = AttackMode::pgd;
    AttackStatus status = AttackStatus::ok;
    std::vector<std::string> warnings;
    /// Final pixel perturbation relative to the pixel-stage input, channels-last.
    std::vector<double> perturbation;
    /// Final latent offset lambda for the latent modes.
    std::vector<double> latent_perturbation;
};

struct PgdOptions {
    /// When false the iterate is never clamped to [0, 1]; perturbation then
    /// holds the raw projected delta. Test harness use only.
    bool clamp_to_unit_range = true;
};

/// Sign-gradient descent on delta inside the L-inf ball of radius epsilon,
/// restricted to pixels where `mask` is set. Pixels outside the mask are
/// returned bit-identical to `image`. An all-zero mask yields the input and a
/// warning.
AttackResult masked_pgd(const ImageTensor& image, const ImageTensor& target, const EmbedderEnsemble& ensemble,
                        const BinaryMask& mask, const AttackConfig& config, const PgdOptions& options = {});

/// Sign-gradient descent on a latent offset lambda (L-inf radius eta) while
/// the attribute offset ramps linearly from 0 to its full strength.
AttackResult age_attack(const ImageTensor& image, const ImageTensor& target, const EmbedderEnsemble& ensemble,
                        const GenerativeModel& generator, const AttributeDirection& attribute,
                        const AttackConfig& config);

/// The stage-2 mask computed on `image`: texture only for tma modes, texture
/// AND hair for ftm modes, all ones otherwise.
BinaryMask attack_mask(AttackMode mode, const ImageTensor& image, const FaceParser* parser,
                       std::string_view source_id, const AttackConfig& config);

/// AGE followed by a masked pixel attack whose mask is computed on x_AGE.
/// config.mode selects age-tma or age-ftm.
AttackResult age_ftm(const ImageTensor& image, const ImageTensor& target, const EmbedderEnsemble& ensemble,
                     const GenerativeModel& generator, const AttributeDirection& attribute, const FaceParser& parser,
                     std::string_view source_id, const AttackConfig& config);

/// Everything a mode may need besides the images and the ensemble.
struct AttackContext {
    const GenerativeModel* generator = nullptr;
    const AttributeDirection* attribute = nullptr;
    const FaceParser* parser = nullptr;
    /// Identifier handed to the parser (annotation lookup key).
    std::string source_id;
};

/// Runs config.mode. ParameterError when the context lacks a component the
/// mode needs.
AttackResult run_attack(const ImageTensor& image, const ImageTensor& target, const EmbedderEnsemble& ensemble,
                        const AttackContext& context, const AttackConfig& config);

}  // namespace dualcloak
