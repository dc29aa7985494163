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

#include "dualcloak/attacks.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "dualcloak/errors.hpp"

namespace dualcloak {

namespace {

constexpr std::array<std::pair<AttackMode, std::string_view>, 6> kModeNames{{
    {AttackMode::pgd, "pgd"},
    {AttackMode::tma, "tma"},
    {AttackMode::ftm, "ftm"},
    {AttackMode::age, "age"},
    {AttackMode::age_tma, "age-tma"},
    {AttackMode::age_ftm, "age-ftm"},
}};

double sign_of(double g) {
    if (g > 0.0) return 1.0;
    if (g < 0.0) return -1.0;
    return 0.0;  // zero and NaN leave the coordinate alone
}

/// Sum of (1 - cos) to fixed reference embeddings; negated for untargeted
/// runs so that both directions are minimized.
class Objective {
public:
    Objective(const EmbedderEnsemble& ensemble, const ImageTensor& reference, bool untargeted)
        : ensemble_(ensemble),
          references_(embed_all(ensemble, reference.view())),
          sign_(untargeted ? -1.0 : 1.0) {}

    ObjectiveValue evaluate(const ImageView& image) const {
        auto out = ensemble_distance_with_gradient(ensemble_, image, references_);
        out.value *= sign_;
        if (sign_ < 0) {
            for (double& g : out.gradient) g = -g;
        }
        return out;
    }

    double value(const ImageView& image) const { return sign_ * ensemble_distance_to(ensemble_, image, references_); }

private:
    const EmbedderEnsemble& ensemble_;
    std::vector<FaceEmbedding> references_;
    double sign_;
};

const ImageTensor& objective_reference(const ImageTensor& source, const ImageTensor& target, const AttackConfig& c) {
    return c.untargeted ? source : target;
}

void check_mask_shape(const BinaryMask& mask, const Shape& shape) {
    if (mask.height != shape.height || mask.width != shape.width ||
        mask.bits.size() != static_cast<std::size_t>(shape.pixels())) {
        throw ParameterError("mask is " + std::to_string(mask.height) + "x" + std::to_string(mask.width) +
                             " but image is " + to_string(shape));
    }
}

/// One projected sign step on delta for masked pixels, then mask, clamp and
/// re-derivation of delta from the clamped image.
void pixel_step(std::span<const double> base, const BinaryMask& mask, int channels, std::span<const double> gradient,
                const AttackConfig& config, bool clamp, std::vector<double>& delta, std::vector<double>& current) {
    for (std::size_t i = 0; i < base.size(); ++i) {
        if (!mask.bits[i / static_cast<std::size_t>(channels)]) continue;
        double d = std::clamp(delta[i] - config.epsilon_iter * sign_of(gradient[i]), -config.epsilon, config.epsilon);
        const double moved = base[i] + d;
        double next = moved;
        if (clamp) {
            next = std::clamp(moved, 0.0, 1.0);
            if (next != moved) d = next - base[i];
        }
        delta[i] = d;
        current[i] = next;
    }
}

AttackResult pgd_core(const ImageTensor& image, const Objective& objective, const BinaryMask& mask,
                      const AttackConfig& config, const PgdOptions& options) {
    const Shape shape = image.shape();
    check_mask_shape(mask, shape);
    const auto base = image.values();

    AttackResult result(image, config.mode);
    result.mask_used = mask;
    result.perturbation.assign(base.size(), 0.0);

    if (mask.popcount() == 0) {
        const double initial = objective.value(image.view());
        result.loss_trace.assign(static_cast<std::size_t>(config.off_steps) + 1, initial);
        if (config.off_steps > 0) {
            result.status = AttackStatus::warning;
            result.warnings.emplace_back("mask is empty; image left unchanged");
        }
        return result;
    }

    std::vector<double> current(base.begin(), base.end());
    auto& delta = result.perturbation;
    for (int k = 0; k < config.off_steps; ++k) {
        const auto step = objective.evaluate(ImageView{shape, current});
        result.loss_trace.push_back(step.value);
        pixel_step(base, mask, shape.channels, step.gradient, config, options.clamp_to_unit_range, delta, current);
    }
    result.loss_trace.push_back(objective.value(ImageView{shape, current}));

    result.protected_image = options.clamp_to_unit_range ? ImageTensor(shape, std::move(current))
                                                         : ImageTensor::clamped(shape, std::move(current));
    return result;
}

std::vector<double> schedule_or_zero(const AttributeDirection& attribute, int k, int n_total) {
    if (n_total == 0) return std::vector<double>(attribute.dim(), 0.0);
    return attribute_schedule(attribute, std::min(k, n_total), n_total);
}

std::vector<double> shifted_latent(std::span<const double> z, std::span<const double> lambda,
                                   std::span<const double> offset) {
    std::vector<double> out(z.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (z[i] + lambda[i]) + offset[i];
    return out;
}

void latent_step(std::span<const double> gradient, const AttackConfig& config, std::vector<double>& lambda) {
    for (std::size_t i = 0; i < lambda.size(); ++i) {
        lambda[i] = std::clamp(lambda[i] - config.eta_iter * sign_of(gradient[i]), -config.eta, config.eta);
    }
}

LatentCode checked_encode(const GenerativeModel& generator, const AttributeDirection& attribute,
                          const ImageTensor& image) {
    attribute.validate();
    auto z = encode(generator, image);
    if (attribute.dim() != z.size()) {
        throw ParameterError("attribute '" + attribute.name + "' has dimension " + std::to_string(attribute.dim()) +
                             ", generator latent has " + std::to_string(z.size()));
    }
    return z;
}

AttackResult age_core(const ImageTensor& image, const Objective& objective, const GenerativeModel& generator,
                      const AttributeDirection& attribute, const AttackConfig& config) {
    const auto z = checked_encode(generator, attribute, image);
    const int n = config.n_latent_steps;
    std::vector<double> lambda(z.size(), 0.0);

    AttackResult result(image, config.mode);
    for (int k = 0; k < n; ++k) {
        const auto latent = shifted_latent(z.values, lambda, schedule_or_zero(attribute, k, n));
        const auto decoded = generator.generate(latent);
        const auto step = objective.evaluate(decoded.view());
        result.loss_trace.push_back(step.value);
        latent_step(generator.backprop(latent, step.gradient), config, lambda);
    }
    auto x_age = generator.generate(shifted_latent(z.values, lambda, schedule_or_zero(attribute, n, n)));
    result.loss_trace.push_back(objective.value(x_age.view()));
    result.intermediate_on_manifold = x_age;
    result.protected_image = std::move(x_age);
    result.latent_perturbation = std::move(lambda);
    return result;
}

AttackResult age_pixel_sequential(const ImageTensor& image, const Objective& objective,
                                  const GenerativeModel& generator, const AttributeDirection& attribute,
                                  const FaceParser& parser, std::string_view source_id, const AttackConfig& config) {
    auto stage1 = age_core(image, objective, generator, attribute, config);
    const ImageTensor& x_age = *stage1.intermediate_on_manifold;
    const auto mask = attack_mask(config.mode, x_age, &parser, source_id, config);
    auto stage2 = pgd_core(x_age, objective, mask, config, {});

    AttackResult result = std::move(stage2);
    result.mode = config.mode;
    result.intermediate_on_manifold = x_age;
    result.latent_perturbation = std::move(stage1.latent_perturbation);
    std::vector<double> trace = std::move(stage1.loss_trace);
    trace.insert(trace.end(), result.loss_trace.begin() + 1, result.loss_trace.end());
    result.loss_trace = std::move(trace);
    return result;
}

/// Applies delta on top of `base` where the mask is set, clamping and
/// re-deriving delta; zeroes delta elsewhere.
std::vector<double> compose(std::span<const double> base, const BinaryMask& mask, int channels,
                            std::vector<double>& delta) {
    std::vector<double> out(base.begin(), base.end());
    for (std::size_t i = 0; i < base.size(); ++i) {
        if (!mask.bits[i / static_cast<std::size_t>(channels)]) {
            delta[i] = 0.0;
            continue;
        }
        const double moved = base[i] + delta[i];
        const double next = std::clamp(moved, 0.0, 1.0);
        if (next != moved) delta[i] = next - base[i];
        out[i] = next;
    }
    return out;
}

AttackResult age_pixel_joint(const ImageTensor& image, const Objective& objective, const GenerativeModel& generator,
                             const AttributeDirection& attribute, const FaceParser& parser,
                             std::string_view source_id, const AttackConfig& config) {
    const auto z = checked_encode(generator, attribute, image);
    const int n = config.n_latent_steps;
    const int iterations = std::max(n, config.off_steps);
    const Shape shape = image.shape();
    std::vector<double> lambda(z.size(), 0.0);
    std::vector<double> delta(shape.size(), 0.0);

    auto latent = shifted_latent(z.values, lambda, schedule_or_zero(attribute, 0, n));
    ImageTensor x_age = generator.generate(latent);
    if (!(x_age.shape() == shape)) throw ManifoldError("generator output shape differs from the input image");
    BinaryMask mask = attack_mask(config.mode, x_age, &parser, source_id, config);
    auto current = compose(x_age.values(), mask, shape.channels, delta);

    AttackResult result(image, config.mode);
    for (int k = 0; k < iterations; ++k) {
        const auto step = objective.evaluate(ImageView{shape, current});
        result.loss_trace.push_back(step.value);
        if (k < n) latent_step(generator.backprop(latent, step.gradient), config, lambda);
        if (k < config.off_steps) {
            for (std::size_t i = 0; i < delta.size(); ++i) {
                if (!mask.bits[i / static_cast<std::size_t>(shape.channels)]) continue;
                delta[i] = std::clamp(delta[i] - config.epsilon_iter * sign_of(step.gradient[i]), -config.epsilon,
                                      config.epsilon);
            }
        }
        if (k < n) {
            latent = shifted_latent(z.values, lambda, schedule_or_zero(attribute, k + 1, n));
            x_age = generator.generate(latent);
            mask = attack_mask(config.mode, x_age, &parser, source_id, config);
        }
        current = compose(x_age.values(), mask, shape.channels, delta);
    }
    result.loss_trace.push_back(objective.value(ImageView{shape, current}));
    if (mask.popcount() == 0 && config.off_steps > 0) {
        result.status = AttackStatus::warning;
        result.warnings.emplace_back("mask is empty; pixel stage left x_AGE unchanged");
    }
    result.protected_image = ImageTensor(shape, std::move(current));
    result.intermediate_on_manifold = std::move(x_age);
    result.mask_used = std::move(mask);
    result.perturbation = std::move(delta);
    result.latent_perturbation = std::move(lambda);
    return result;
}

}  // namespace

std::string_view to_string(AttackMode mode) {
    for (const auto& [m, name] : kModeNames) {
        if (m == mode) return name;
    }
    return "unknown";
}

AttackMode parse_attack_mode(std::string_view text) {
    for (const auto& [m, name] : kModeNames) {
        if (name == text) return m;
    }
    throw ParameterError("unknown attack mode '" + std::string(text) +
                         "' (expected pgd, tma, ftm, age, age-tma or age-ftm)");
}

const std::vector<AttackMode>& all_attack_modes() {
    static const std::vector<AttackMode> modes{AttackMode::pgd, AttackMode::tma,     AttackMode::ftm,
                                               AttackMode::age, AttackMode::age_tma, AttackMode::age_ftm};
    return modes;
}

bool uses_generator(AttackMode mode) {
    return mode == AttackMode::age || mode == AttackMode::age_tma || mode == AttackMode::age_ftm;
}

bool uses_parser(AttackMode mode) { return mode == AttackMode::ftm || mode == AttackMode::age_ftm; }

std::string_view to_string(Composition composition) {
    return composition == Composition::joint ? "joint" : "sequential";
}

Composition parse_composition(std::string_view text) {
    if (text == "sequential") return Composition::sequential;
    if (text == "joint") return Composition::joint;
    throw ParameterError("unknown composition '" + std::string(text) + "' (expected sequential or joint)");
}

void AttackConfig::validate() const {
    auto finite = [](double v) { return std::isfinite(v); };
    if (!finite(epsilon) || epsilon < 0.0 || epsilon > 1.0) throw ParameterError("attack.epsilon must lie in [0, 1]");
    if (!finite(epsilon_iter) || epsilon_iter < 0.0 || epsilon_iter > epsilon) {
        throw ParameterError("attack.epsilon_iter must lie in [0, epsilon]");
    }
    if (off_steps < 0) throw ParameterError("attack.off_steps must be >= 0");
    if (!finite(eta) || eta < 0.0) throw ParameterError("attack.eta must be >= 0");
    if (!finite(eta_iter) || eta_iter < 0.0 || eta_iter > eta) {
        throw ParameterError("attack.eta_iter must lie in [0, eta]");
    }
    if (n_latent_steps < 0) throw ParameterError("attack.n_latent_steps must be >= 0");
    if (!finite(gamma) || gamma < 0.0) throw ParameterError("attack.gamma must be >= 0");
    blur.validate();
}

AttackResult masked_pgd(const ImageTensor& image, const ImageTensor& target, const EmbedderEnsemble& ensemble,
                        const BinaryMask& mask, const AttackConfig& config, const PgdOptions& options) {
    config.validate();
    const Objective objective(ensemble, objective_reference(image, target, config), config.untargeted);
    return pgd_core(image, objective, mask, config, options);
}

AttackResult age_attack(const ImageTensor& image, const ImageTensor& target, const EmbedderEnsemble& ensemble,
                        const GenerativeModel& generator, const AttributeDirection& attribute,
                        const AttackConfig& config) {
    config.validate();
    const Objective objective(ensemble, objective_reference(image, target, config), config.untargeted);
    return age_core(image, objective, generator, attribute, config);
}

BinaryMask attack_mask(AttackMode mode, const ImageTensor& image, const FaceParser* parser,
                       std::string_view source_id, const AttackConfig& config) {
    const Shape s = image.shape();
    switch (mode) {
        case AttackMode::pgd:
        case AttackMode::age:
            return BinaryMask::filled(s.height, s.width, true);
        case AttackMode::tma:
        case AttackMode::age_tma:
            return texture_mask(image, config.gamma, config.blur);
        case AttackMode::ftm:
        case AttackMode::age_ftm: {
            if (parser == nullptr) throw ParameterError(std::string(to_string(mode)) + " needs a face parser");
            const auto labels = parse_face(*parser, image, source_id);
            const auto& vocabulary = parser->label_set();
            return combine_masks(texture_mask(image, config.gamma, config.blur),
                                 hair_mask(labels, vocabulary.hair_label, vocabulary));
        }
    }
    throw ParameterError("unhandled attack mode");
}

AttackResult age_ftm(const ImageTensor& image, const ImageTensor& target, const EmbedderEnsemble& ensemble,
                     const GenerativeModel& generator, const AttributeDirection& attribute, const FaceParser& parser,
                     std::string_view source_id, const AttackConfig& config) {
    config.validate();
    if (config.mode != AttackMode::age_tma && config.mode != AttackMode::age_ftm) {
        throw ParameterError("age_ftm runs age-tma or age-ftm, not " + std::string(to_string(config.mode)));
    }
    const Objective objective(ensemble, objective_reference(image, target, config), config.untargeted);
    if (config.composition == Composition::joint) {
        return age_pixel_joint(image, objective, generator, attribute, parser, source_id, config);
    }
    return age_pixel_sequential(image, objective, generator, attribute, parser, source_id, config);
}

AttackResult run_attack(const ImageTensor& image, const ImageTensor& target, const EmbedderEnsemble& ensemble,
                        const AttackContext& context, const AttackConfig& config) {
    const AttackMode mode = config.mode;
    if (uses_generator(mode) && (context.generator == nullptr || context.attribute == nullptr)) {
        throw ParameterError(std::string(to_string(mode)) + " needs a generator and an attribute direction");
    }
    if (uses_parser(mode) && context.parser == nullptr) {
        throw ParameterError(std::string(to_string(mode)) + " needs a face parser");
    }
    switch (mode) {
        case AttackMode::pgd:
        case AttackMode::tma:
        case AttackMode::ftm:
            config.validate();
            return masked_pgd(image, target, ensemble,
                              attack_mask(mode, image, context.parser, context.source_id, config), config);
        case AttackMode::age:
            return age_attack(image, target, ensemble, *context.generator, *context.attribute, config);
        case AttackMode::age_tma: {
            // The texture-only variant never consults the parser.
            static const FixtureParser unused_parser;
            const FaceParser& parser = context.parser ? *context.parser : unused_parser;
            return age_ftm(image, target, ensemble, *context.generator, *context.attribute, parser,
                           context.source_id, config);
        }
        case AttackMode::age_ftm:
            return age_ftm(image, target, ensemble, *context.generator, *context.attribute, *context.parser,
                           context.source_id, config);
    }
    throw ParameterError("unhandled attack mode");
}

}  // namespace dualcloak
