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
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dualcloak/image.hpp"

namespace dualcloak {

/// A point z in a generator's d-dimensional latent space.
struct LatentCode {
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
    friend bool operator==(const LatentCode&, const LatentCode&) = default;
};

/// A semantic edit direction ("age", "smile", ...) in latent space: a unit
/// vector and a separate signed strength.
struct AttributeDirection {
    std::string name;
    std::vector<double> direction;
    double strength = 0.0;

    /// Normalizes `raw` to unit length; throws ParameterError for a zero vector.
    static AttributeDirection from_raw(std::string name, std::vector<double> raw, double strength);
    /// The no-op edit for a d-dimensional space (unit e_0 with strength 0).
    static AttributeDirection none(std::size_t dim);

    std::size_t dim() const { return direction.size(); }
    /// Throws ParameterError unless |direction| = 1 within 1e-6.
    void validate() const;
};

/// JSON file: {"name": ..., "dim": d, "direction": [d floats], "strength": s}.
AttributeDirection load_attribute(const std::filesystem::path& path);
void save_attribute(const AttributeDirection& attribute, const std::filesystem::path& path);

/// Encoder E / generator G pair. Attribute conditioning is an additive latent
/// offset applied by decode(); implementations only provide the base map.
class GenerativeModel {
public:
    virtual ~GenerativeModel() = default;

    virtual std::string_view name() const = 0;
    virtual std::size_t latent_dim() const = 0;
    virtual Shape output_shape() const = 0;

    virtual LatentCode encode(const ImageTensor& image) const = 0;
    /// G_base(z), clamped to [0, 1].
    virtual ImageTensor generate(std::span<const double> latent) const = 0;
    /// Gradient with respect to z of <upstream, G_base(z)>.
    virtual std::vector<double> backprop(std::span<const double> latent, std::span<const double> upstream) const = 0;

    virtual bool concurrent_safe() const { return true; }
};

using GeneratorPtr = std::shared_ptr<const GenerativeModel>;

/// Latent space equals pixel space: encode flattens, generate clamps. The
/// clamp is treated as the identity when back-propagating, so saturated
/// pixels still receive gradient.
class ToyIdentityGenerator final : public GenerativeModel {
public:
    explicit ToyIdentityGenerator(Shape shape);

    std::string_view name() const override { return "toy-identity"; }
    std::size_t latent_dim() const override { return shape_.size(); }
    Shape output_shape() const override { return shape_; }
    LatentCode encode(const ImageTensor& image) const override;
    ImageTensor generate(std::span<const double> latent) const override;
    std::vector<double> backprop(std::span<const double> latent, std::span<const double> upstream) const override;

private:
    Shape shape_;
};

/// Whitened linear decoder in logit space:
///   G(z) = sigmoid(mean + basis * z),  E(x) = pinv(basis) (logit(x) - mean)
/// where the basis holds the leading principal components of logit-domain
/// training images scaled by their standard deviations, so every latent
/// coordinate has unit variance over the training set.
class ToyDecoderGenerator final : public GenerativeModel {
public:
    /// Fits the decoder on `images` (all of one shape) with `latent_dim`
    /// components.
    static ToyDecoderGenerator fit(std::span<const ImageTensor> images, std::size_t latent_dim);

    std::string_view name() const override { return "toy-decoder"; }
    std::size_t latent_dim() const override { return latent_dim_; }
    Shape output_shape() const override { return shape_; }
    LatentCode encode(const ImageTensor& image) const override;
    ImageTensor generate(std::span<const double> latent) const override;
    std::vector<double> backprop(std::span<const double> latent, std::span<const double> upstream) const override;

    void save(const std::filesystem::path& path) const;
    static ToyDecoderGenerator load(const std::filesystem::path& path);

    /// Pixels are clipped to [kLogitClip, 1 - kLogitClip] before the logit.
    static constexpr double kLogitClip = 0.02;

private:
    ToyDecoderGenerator(Shape shape, std::size_t latent_dim, std::vector<double> mean, std::vector<double> basis,
                        std::vector<double> scales);
    std::vector<double> pre_activation(std::span<const double> latent) const;

    Shape shape_;
    std::size_t latent_dim_ = 0;
    std::vector<double> mean_;    // pixel count
    std::vector<double> basis_;   // pixel count x latent_dim, row-major, scaled
    std::vector<double> scales_;  // per-component standard deviation
};

/// E(x), wrapping failures in ManifoldError.
LatentCode encode(const GenerativeModel& generator, const ImageTensor& image);

/// (k / N) * strength * direction. ParameterError when N = 0 or k > N.
std::vector<double> attribute_schedule(const AttributeDirection& attribute, int k, int n_total);

/// G_base(z + attr_scale * strength * direction).
ImageTensor decode(const GenerativeModel& generator, const LatentCode& latent, const AttributeDirection& attribute,
                   double attr_scale);

/// G_base(z + offset) for an explicit latent offset.
ImageTensor decode_with_offset(const GenerativeModel& generator, std::span<const double> latent,
                               std::span<const double> offset);

}  // namespace dualcloak
