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
#include <string>
#include <vector>

#include "dualcloak/embedding.hpp"

namespace dualcloak {

/// Layout of a ToyConvNet: a stack of 3x3 stride-2 convolutions with tanh
/// activations followed by a linear projection to the embedding.
struct ConvNetArch {
    Shape input{32, 32, 3};
    std::vector<int> channels{8, 16, 16};
    std::size_t embed_dim = 32;

    friend bool operator==(const ConvNetArch&, const ConvNetArch&) = default;
};

struct ConvNetTraining {
    int epochs = 20;
    int batch_size = 32;
    double learning_rate = 3e-3;
    /// Logit scale of the cosine softmax head.
    double logit_scale = 12.0;
    /// Standard deviation of Gaussian pixel noise redrawn for every sample
    /// in every epoch (0 disables it).
    double input_noise = 0.0;
    std::uint64_t seed = 1;
};

/// One labeled training example; pixels are channels-last in [0, 1].
struct LabeledImage {
    ImageTensor image;
    int identity = 0;
};

/// Small differentiable convolutional face embedder.
class ToyConvNet final : public FixedInputEmbedder {
public:
    /// Randomly initialized network (scaled uniform init from `seed`).
    ToyConvNet(std::string name, ConvNetArch arch, std::uint64_t seed);

    /// Trains the embedding with a cosine-softmax identity classifier that is
    /// discarded afterwards. Returns the mean loss of every epoch.
    std::vector<double> train(const std::vector<LabeledImage>& data, int num_identities,
                              const ConvNetTraining& options);

    std::string_view name() const override { return name_; }
    std::size_t embed_dim() const override { return arch_.embed_dim; }
    const ConvNetArch& arch() const { return arch_; }
    const std::vector<double>& parameters() const { return params_; }

    void save(const std::filesystem::path& path) const;
    static ToyConvNet load(const std::filesystem::path& path);

protected:
    FaceEmbedding embed_native(std::span<const double> pixels) const override;
    std::vector<double> backprop_native(std::span<const double> pixels,
                                        std::span<const double> upstream) const override;
    std::vector<double> embed_and_backprop_native(
        std::span<const double> pixels, const std::function<std::vector<double>(const FaceEmbedding&)>& upstream_of,
        FaceEmbedding& embedding_out) const override;

private:
    struct ConvLayer {
        int in_c, out_c, in_h, in_w, out_h, out_w;
        std::size_t weight_offset, bias_offset;
    };
    struct Activations;

    ToyConvNet(std::string name, ConvNetArch arch, std::vector<double> params);
    void build_layout();

    Activations forward(std::span<const double> pixels) const;
    /// Backpropagates d(embedding); accumulates parameter gradients into
    /// `param_grad` when non-null. Returns the pixel gradient (channels-last).
    std::vector<double> backward(const Activations& acts, std::span<const double> upstream,
                                 std::vector<double>* param_grad) const;

    std::string name_;
    ConvNetArch arch_;
    std::vector<ConvLayer> layers_;
    std::size_t linear_weight_offset_ = 0;
    std::size_t linear_bias_offset_ = 0;
    std::size_t flat_size_ = 0;
    std::vector<double> params_;
};

}  // namespace dualcloak
