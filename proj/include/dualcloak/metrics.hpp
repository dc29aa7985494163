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
#include <span>
#include <string_view>
#include <vector>

#include "dualcloak/embedding.hpp"
#include "dualcloak/image.hpp"

namespace dualcloak {

/// Holdout cosine between each protected image and its target.
std::vector<double> pair_cosines(std::span<const ImageTensor> protected_images, std::span<const ImageTensor> targets,
                                 const FaceEmbedder& holdout);

/// Fraction of pairs the holdout model verifies as the same identity.
double attack_success_rate(std::span<const ImageTensor> protected_images, std::span<const ImageTensor> targets,
                           const FaceEmbedder& holdout, const VerificationThreshold& threshold);

using FeatureSet = std::vector<std::vector<double>>;

/// Frechet distance between Gaussian fits of two feature sets:
///   |mu_a - mu_b|^2 + Tr(S_a + S_b - 2 (S_a S_b)^(1/2))
/// Sample covariances use the n - 1 denominator and get 1e-6 * I added.
double fid(const FeatureSet& features_a, const FeatureSet& features_b);

class FeatureExtractor {
public:
    virtual ~FeatureExtractor() = default;
    virtual std::string_view name() const = 0;
    virtual std::size_t dim() const = 0;
    virtual std::vector<double> features(const ImageTensor& image) const = 0;
};

/// tanh of a fixed Gaussian random projection of the image, resized to a
/// fixed input shape.
class RandomProjectionExtractor final : public FeatureExtractor {
public:
    RandomProjectionExtractor(Shape input_shape, std::size_t dim, std::uint64_t seed);

    std::string_view name() const override { return "random-projection"; }
    std::size_t dim() const override { return dim_; }
    std::vector<double> features(const ImageTensor& image) const override;

private:
    Shape input_shape_;
    std::size_t dim_;
    std::vector<double> matrix_;
};

FeatureSet extract_features(const FeatureExtractor& extractor, std::span<const ImageTensor> images);

}  // namespace dualcloak
