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
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dualcloak/image.hpp"

namespace dualcloak {

struct FaceEmbedding {
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
    friend bool operator==(const FaceEmbedding&, const FaceEmbedding&) = default;
};

/// A face-recognition model f mapping images to feature vectors.
///
/// Implementations must be deterministic and expose vector-Jacobian products
/// so attacks can differentiate any scalar function of the embedding with
/// respect to the input pixels. Models with a fixed native resolution resample
/// other inputs themselves (see FixedInputEmbedder).
class FaceEmbedder {
public:
    virtual ~FaceEmbedder() = default;

    virtual std::string_view name() const = 0;
    virtual std::size_t embed_dim() const = 0;

    virtual FaceEmbedding embed(const ImageView& image) const = 0;

    /// Gradient with respect to the pixels of <upstream, embed(image)>.
    virtual std::vector<double> backprop(const ImageView& image, std::span<const double> upstream) const = 0;

    /// Forward pass followed by backprop of upstream_of(embedding). The default
    /// runs the forward pass twice; models that cache activations override it.
    virtual std::vector<double> embed_and_backprop(
        const ImageView& image, const std::function<std::vector<double>(const FaceEmbedding&)>& upstream_of,
        FaceEmbedding& embedding_out) const;

    /// False when concurrent calls on one instance are unsafe.
    virtual bool concurrent_safe() const { return true; }
};

/// Base for models with one native input shape. Other input sizes are
/// bilinearly resampled on the way in and the gradient is mapped back through
/// the adjoint of the resampling.
class FixedInputEmbedder : public FaceEmbedder {
public:
    explicit FixedInputEmbedder(Shape native_shape) : native_shape_(native_shape) {}

    const Shape& native_shape() const { return native_shape_; }

    FaceEmbedding embed(const ImageView& image) const final;
    std::vector<double> backprop(const ImageView& image, std::span<const double> upstream) const final;
    std::vector<double> embed_and_backprop(
        const ImageView& image, const std::function<std::vector<double>(const FaceEmbedding&)>& upstream_of,
        FaceEmbedding& embedding_out) const final;

protected:
    virtual FaceEmbedding embed_native(std::span<const double> pixels) const = 0;
    virtual std::vector<double> backprop_native(std::span<const double> pixels,
                                                std::span<const double> upstream) const = 0;
    virtual std::vector<double> embed_and_backprop_native(
        std::span<const double> pixels, const std::function<std::vector<double>(const FaceEmbedding&)>& upstream_of,
        FaceEmbedding& embedding_out) const;

private:
    std::vector<double> to_native(const ImageView& image) const;
    std::vector<double> from_native_gradient(const ImageView& image, std::vector<double> gradient) const;

    Shape native_shape_;
};

/// f(x) = A * flatten(x) with a fixed random matrix A (entries N(0, 1/n)).
class ToyLinearEmbedder final : public FixedInputEmbedder {
public:
    ToyLinearEmbedder(std::string name, Shape input_shape, std::size_t embed_dim, std::uint64_t seed);
    /// Explicit row-major matrix of size embed_dim x input_shape.size().
    ToyLinearEmbedder(std::string name, Shape input_shape, std::size_t embed_dim, std::vector<double> matrix);

    std::string_view name() const override { return name_; }
    std::size_t embed_dim() const override { return embed_dim_; }
    const std::vector<double>& matrix() const { return matrix_; }

protected:
    FaceEmbedding embed_native(std::span<const double> pixels) const override;
    std::vector<double> backprop_native(std::span<const double> pixels,
                                        std::span<const double> upstream) const override;

private:
    std::string name_;
    std::size_t embed_dim_;
    std::vector<double> matrix_;
};

using EmbedderPtr = std::shared_ptr<const FaceEmbedder>;

/// The ordered, non-empty set of surrogate models an attack is crafted on.
/// Members are weighted equally.
class EmbedderEnsemble {
public:
    explicit EmbedderEnsemble(std::vector<EmbedderPtr> members);

    const std::vector<EmbedderPtr>& members() const { return members_; }
    std::size_t size() const { return members_.size(); }
    bool contains(std::string_view name) const;
    bool concurrent_safe() const;

private:
    std::vector<EmbedderPtr> members_;
};

/// Runs the model and checks its output contract; failures become EmbedError.
FaceEmbedding embed(const FaceEmbedder& model, const ImageTensor& image);
FaceEmbedding embed(const FaceEmbedder& model, const ImageView& image);

/// dot(a,b) / (|a||b|). ParameterError on length mismatch,
/// DegenerateEmbeddingError when either vector is all zeros.
double cosine_similarity(const FaceEmbedding& a, const FaceEmbedding& b);

/// Gradient of cosine_similarity(a, b) with respect to a.
std::vector<double> cosine_similarity_gradient(const FaceEmbedding& a, const FaceEmbedding& b);

/// Sum over members of 1 - cos(f(image), f(target)); lies in [0, 2 * members].
double ensemble_distance(const EmbedderEnsemble& ensemble, const ImageTensor& image, const ImageTensor& target);

/// Target embeddings for each member, in member order.
std::vector<FaceEmbedding> embed_all(const EmbedderEnsemble& ensemble, const ImageView& image);

struct ObjectiveValue {
    double value = 0.0;
    std::vector<double> gradient;  // d value / d pixel, channels-last
};

/// ensemble_distance and its pixel gradient at `image`, against precomputed
/// per-member target embeddings.
ObjectiveValue ensemble_distance_with_gradient(const EmbedderEnsemble& ensemble, const ImageView& image,
                                               std::span<const FaceEmbedding> targets);

double ensemble_distance_to(const EmbedderEnsemble& ensemble, const ImageView& image,
                            std::span<const FaceEmbedding> targets);

/// Cosine-similarity acceptance threshold calibrated at a false-accept rate.
struct VerificationThreshold {
    double tau = 0.0;
    double far = 0.01;
};

/// tau is the (1 - far) quantile of the impostor scores, using piecewise
/// linear interpolation with plotting positions p_k = (k - 0.5) / n over the
/// sorted scores (clamped to the extreme order statistics).
VerificationThreshold calibrate_threshold(std::span<const double> impostor_scores, double far);

/// Same-identity decision: cosine_similarity(a, b) >= tau (inclusive).
bool verify(const FaceEmbedding& a, const FaceEmbedding& b, const VerificationThreshold& threshold);

}  // namespace dualcloak
