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

#include "dualcloak/metrics.hpp"

#include <Eigen/Dense>

#include <cmath>

#include "dualcloak/errors.hpp"
#include "dualcloak/random.hpp"

namespace dualcloak {

std::vector<double> pair_cosines(std::span<const ImageTensor> protected_images, std::span<const ImageTensor> targets,
                                 const FaceEmbedder& holdout) {
    if (protected_images.size() != targets.size()) {
        throw ParameterError("protected and target lists differ in length (" +
                             std::to_string(protected_images.size()) + " vs " + std::to_string(targets.size()) + ")");
    }
    std::vector<double> out;
    out.reserve(targets.size());
    for (std::size_t i = 0; i < targets.size(); ++i) {
        out.push_back(cosine_similarity(embed(holdout, protected_images[i]), embed(holdout, targets[i])));
    }
    return out;
}

double attack_success_rate(std::span<const ImageTensor> protected_images, std::span<const ImageTensor> targets,
                           const FaceEmbedder& holdout, const VerificationThreshold& threshold) {
    const auto cosines = pair_cosines(protected_images, targets, holdout);
    if (cosines.empty()) throw ParameterError("attack success rate of an empty pair list");
    std::size_t hits = 0;
    for (double c : cosines) hits += c >= threshold.tau ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(cosines.size());
}

namespace {

struct Moments {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};

Moments moments_of(const FeatureSet& features, std::size_t dim) {
    const auto n = static_cast<Eigen::Index>(features.size());
    const auto d = static_cast<Eigen::Index>(dim);
    Eigen::MatrixXd x(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& row = features[static_cast<std::size_t>(i)];
        if (row.size() != dim) throw ParameterError("feature vectors have inconsistent dimensions");
        for (Eigen::Index j = 0; j < d; ++j) x(i, j) = row[static_cast<std::size_t>(j)];
    }
    Moments m;
    m.mean = x.colwise().mean().transpose();
    x.rowwise() -= m.mean.transpose();
    const double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;
    m.cov = (x.transpose() * x) / denom;
    m.cov.diagonal().array() += 1e-6;
    return m;
}

/// Symmetric PSD square root with negative eigenvalues clipped to zero.
Eigen::MatrixXd sqrt_psd(const Eigen::MatrixXd& a) {
    const Eigen::MatrixXd sym = 0.5 * (a + a.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
    if (solver.info() != Eigen::Success) throw ParameterError("eigendecomposition failed in fid");
    const Eigen::VectorXd roots = solver.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return solver.eigenvectors() * roots.asDiagonal() * solver.eigenvectors().transpose();
}

}  // namespace

double fid(const FeatureSet& features_a, const FeatureSet& features_b) {
    if (features_a.empty() || features_b.empty()) throw ParameterError("fid needs non-empty feature sets");
    const std::size_t dim = features_a.front().size();
    if (dim == 0 || features_b.front().size() != dim) {
        throw ParameterError("fid feature dimensions differ: " + std::to_string(dim) + " vs " +
                             std::to_string(features_b.front().size()));
    }
    const auto a = moments_of(features_a, dim);
    const auto b = moments_of(features_b, dim);

    // Tr((S_a S_b)^(1/2)) = Tr((R S_b R)^(1/2)) with R = S_a^(1/2), which is symmetric.
    const Eigen::MatrixXd root_a = sqrt_psd(a.cov);
    const Eigen::MatrixXd inner = root_a * b.cov * root_a;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(0.5 * (inner + inner.transpose()), Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw ParameterError("eigendecomposition failed in fid");
    const double cross = solver.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();

    const double value = (a.mean - b.mean).squaredNorm() + a.cov.trace() + b.cov.trace() - 2.0 * cross;
    return std::max(value, 0.0);
}

RandomProjectionExtractor::RandomProjectionExtractor(Shape input_shape, std::size_t dim, std::uint64_t seed)
    : input_shape_(input_shape), dim_(dim) {
    if (dim == 0 || input_shape.size() == 0) throw ParameterError("feature extractor needs a positive size");
    Rng rng(seed);
    const double scale = 1.0 / std::sqrt(static_cast<double>(input_shape.size()));
    matrix_.resize(dim * input_shape.size());
    for (double& w : matrix_) w = rng.normal() * scale;
}

std::vector<double> RandomProjectionExtractor::features(const ImageTensor& image) const {
    if (image.shape().channels != input_shape_.channels) {
        throw ParameterError("feature extractor expects " + std::to_string(input_shape_.channels) + " channels");
    }
    const auto pixels = image.shape() == input_shape_
                            ? std::vector<double>(image.values().begin(), image.values().end())
                            : resize_bilinear(image.view(), input_shape_.height, input_shape_.width);
    std::vector<double> out(dim_);
    const std::size_t n = pixels.size();
    for (std::size_t r = 0; r < dim_; ++r) {
        const double* row = matrix_.data() + r * n;
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += row[i] * (2.0 * pixels[i] - 1.0);
        out[r] = std::tanh(acc);
    }
    return out;
}

FeatureSet extract_features(const FeatureExtractor& extractor, std::span<const ImageTensor> images) {
    FeatureSet out;
    out.reserve(images.size());
    for (const auto& img : images) out.push_back(extractor.features(img));
    return out;
}

}  // namespace dualcloak
