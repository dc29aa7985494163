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

#include "dualcloak/embedding.hpp"

#include <algorithm>
#include <cmath>

#include "dualcloak/errors.hpp"
#include "dualcloak/random.hpp"

namespace dualcloak {

std::vector<double> FaceEmbedder::embed_and_backprop(
    const ImageView& image, const std::function<std::vector<double>(const FaceEmbedding&)>& upstream_of,
    FaceEmbedding& embedding_out) const {
    embedding_out = embed(image);
    const auto upstream = upstream_of(embedding_out);
    return backprop(image, upstream);
}

// ---- FixedInputEmbedder ----------------------------------------------------

std::vector<double> FixedInputEmbedder::to_native(const ImageView& image) const {
    if (image.shape.channels != native_shape_.channels) {
        throw EmbedError(std::string(name()) + " expects " + std::to_string(native_shape_.channels) +
                         "-channel input, got " + to_string(image.shape));
    }
    if (image.data.size() != image.shape.size()) {
        throw EmbedError("image buffer does not match its shape");
    }
    if (image.shape == native_shape_) return {image.data.begin(), image.data.end()};
    return resize_bilinear(image, native_shape_.height, native_shape_.width);
}

std::vector<double> FixedInputEmbedder::from_native_gradient(const ImageView& image,
                                                             std::vector<double> gradient) const {
    if (image.shape == native_shape_) return gradient;
    return resize_bilinear_adjoint(gradient, native_shape_, image.shape);
}

FaceEmbedding FixedInputEmbedder::embed(const ImageView& image) const { return embed_native(to_native(image)); }

std::vector<double> FixedInputEmbedder::backprop(const ImageView& image, std::span<const double> upstream) const {
    if (upstream.size() != embed_dim()) throw EmbedError("upstream gradient has the wrong length");
    return from_native_gradient(image, backprop_native(to_native(image), upstream));
}

std::vector<double> FixedInputEmbedder::embed_and_backprop(
    const ImageView& image, const std::function<std::vector<double>(const FaceEmbedding&)>& upstream_of,
    FaceEmbedding& embedding_out) const {
    return from_native_gradient(image, embed_and_backprop_native(to_native(image), upstream_of, embedding_out));
}

std::vector<double> FixedInputEmbedder::embed_and_backprop_native(
    std::span<const double> pixels, const std::function<std::vector<double>(const FaceEmbedding&)>& upstream_of,
    FaceEmbedding& embedding_out) const {
    embedding_out = embed_native(pixels);
    const auto upstream = upstream_of(embedding_out);
    return backprop_native(pixels, upstream);
}

// ---- ToyLinearEmbedder -----------------------------------------------------

ToyLinearEmbedder::ToyLinearEmbedder(std::string name, Shape input_shape, std::size_t embed_dim, std::uint64_t seed)
    : FixedInputEmbedder(input_shape), name_(std::move(name)), embed_dim_(embed_dim) {
    if (embed_dim == 0) throw ParameterError("embed_dim must be positive");
    const std::size_t n = input_shape.size();
    matrix_.resize(embed_dim * n);
    Rng rng(seed);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (double& a : matrix_) a = rng.normal() * scale;
}

ToyLinearEmbedder::ToyLinearEmbedder(std::string name, Shape input_shape, std::size_t embed_dim,
                                     std::vector<double> matrix)
    : FixedInputEmbedder(input_shape), name_(std::move(name)), embed_dim_(embed_dim), matrix_(std::move(matrix)) {
    if (embed_dim == 0 || matrix_.size() != embed_dim * input_shape.size()) {
        throw ParameterError("linear embedder matrix must be embed_dim x input size");
    }
}

FaceEmbedding ToyLinearEmbedder::embed_native(std::span<const double> pixels) const {
    const std::size_t n = pixels.size();
    FaceEmbedding out{std::vector<double>(embed_dim_, 0.0)};
    for (std::size_t r = 0; r < embed_dim_; ++r) {
        const double* row = matrix_.data() + r * n;
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += row[i] * pixels[i];
        out.values[r] = acc;
    }
    return out;
}

std::vector<double> ToyLinearEmbedder::backprop_native(std::span<const double> pixels,
                                                       std::span<const double> upstream) const {
    const std::size_t n = pixels.size();
    std::vector<double> grad(n, 0.0);
    for (std::size_t r = 0; r < embed_dim_; ++r) {
        const double* row = matrix_.data() + r * n;
        const double u = upstream[r];
        for (std::size_t i = 0; i < n; ++i) grad[i] += row[i] * u;
    }
    return grad;
}

// ---- Ensemble -------------------------------------------------------------

EmbedderEnsemble::EmbedderEnsemble(std::vector<EmbedderPtr> members) : members_(std::move(members)) {
    if (members_.empty()) throw ParameterError("embedder ensemble must not be empty");
    for (const auto& m : members_) {
        if (!m) throw ParameterError("embedder ensemble contains a null member");
    }
}

bool EmbedderEnsemble::contains(std::string_view name) const {
    return std::any_of(members_.begin(), members_.end(), [&](const EmbedderPtr& m) { return m->name() == name; });
}

bool EmbedderEnsemble::concurrent_safe() const {
    return std::all_of(members_.begin(), members_.end(), [](const EmbedderPtr& m) { return m->concurrent_safe(); });
}

// ---- Free functions -------------------------------------------------------

FaceEmbedding embed(const FaceEmbedder& model, const ImageView& image) {
    FaceEmbedding e;
    try {
        e = model.embed(image);
    } catch (const EmbedError&) {
        throw;
    } catch (const std::exception& ex) {
        throw EmbedError(std::string(model.name()) + ": " + ex.what());
    }
    if (e.size() != model.embed_dim()) {
        throw EmbedError(std::string(model.name()) + " returned " + std::to_string(e.size()) +
                         " features, declared " + std::to_string(model.embed_dim()));
    }
    return e;
}

FaceEmbedding embed(const FaceEmbedder& model, const ImageTensor& image) { return embed(model, image.view()); }

namespace {

struct Norms {
    double dot = 0.0;
    double aa = 0.0;
    double bb = 0.0;
};

Norms norms_of(const FaceEmbedding& a, const FaceEmbedding& b) {
    if (a.size() != b.size()) {
        throw ParameterError("embedding lengths differ: " + std::to_string(a.size()) + " vs " +
                             std::to_string(b.size()));
    }
    Norms n;
    for (std::size_t i = 0; i < a.size(); ++i) {
        n.dot += a.values[i] * b.values[i];
        n.aa += a.values[i] * a.values[i];
        n.bb += b.values[i] * b.values[i];
    }
    if (n.aa == 0.0 || n.bb == 0.0) throw DegenerateEmbeddingError("cosine similarity of an all-zero embedding");
    return n;
}

}  // namespace

double cosine_similarity(const FaceEmbedding& a, const FaceEmbedding& b) {
    const auto n = norms_of(a, b);
    return std::clamp(n.dot / std::sqrt(n.aa * n.bb), -1.0, 1.0);
}

std::vector<double> cosine_similarity_gradient(const FaceEmbedding& a, const FaceEmbedding& b) {
    const auto n = norms_of(a, b);
    const double na = std::sqrt(n.aa);
    const double nb = std::sqrt(n.bb);
    const double cos = n.dot / (na * nb);
    std::vector<double> g(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        g[i] = b.values[i] / (na * nb) - cos * a.values[i] / n.aa;
    }
    return g;
}

std::vector<FaceEmbedding> embed_all(const EmbedderEnsemble& ensemble, const ImageView& image) {
    std::vector<FaceEmbedding> out;
    out.reserve(ensemble.size());
    for (const auto& m : ensemble.members()) out.push_back(embed(*m, image));
    return out;
}

double ensemble_distance_to(const EmbedderEnsemble& ensemble, const ImageView& image,
                            std::span<const FaceEmbedding> targets) {
    if (targets.size() != ensemble.size()) throw ParameterError("one target embedding per ensemble member required");
    double total = 0.0;
    for (std::size_t m = 0; m < ensemble.size(); ++m) {
        total += 1.0 - cosine_similarity(embed(*ensemble.members()[m], image), targets[m]);
    }
    return total;
}

double ensemble_distance(const EmbedderEnsemble& ensemble, const ImageTensor& image, const ImageTensor& target) {
    const auto targets = embed_all(ensemble, target.view());
    return ensemble_distance_to(ensemble, image.view(), targets);
}

ObjectiveValue ensemble_distance_with_gradient(const EmbedderEnsemble& ensemble, const ImageView& image,
                                               std::span<const FaceEmbedding> targets) {
    if (targets.size() != ensemble.size()) throw ParameterError("one target embedding per ensemble member required");
    ObjectiveValue out{0.0, std::vector<double>(image.shape.size(), 0.0)};
    for (std::size_t m = 0; m < ensemble.size(); ++m) {
        const auto& model = *ensemble.members()[m];
        const auto& target = targets[m];
        double cos = 0.0;
        FaceEmbedding e;
        std::vector<double> grad;
        try {
            grad = model.embed_and_backprop(
                image,
                [&](const FaceEmbedding& emb) {
                    if (emb.size() != model.embed_dim()) throw EmbedError("embedding length mismatch");
                    cos = cosine_similarity(emb, target);
                    auto g = cosine_similarity_gradient(emb, target);
                    for (double& v : g) v = -v;  // d(1 - cos)
                    return g;
                },
                e);
        } catch (const Error&) {
            throw;
        } catch (const std::exception& ex) {
            throw EmbedError(std::string(model.name()) + ": " + ex.what());
        }
        out.value += 1.0 - cos;
        for (std::size_t i = 0; i < grad.size(); ++i) out.gradient[i] += grad[i];
    }
    return out;
}

VerificationThreshold calibrate_threshold(std::span<const double> impostor_scores, double far) {
    if (impostor_scores.empty()) throw ParameterError("impostor score list is empty");
    if (!(far > 0.0 && far <= 1.0)) throw ParameterError("far must lie in (0, 1]");
    std::vector<double> sorted(impostor_scores.begin(), impostor_scores.end());
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    const double position = n * (1.0 - far) + 0.5;  // 1-based
    double tau;
    if (position <= 1.0) {
        tau = sorted.front();
    } else if (position >= n) {
        tau = sorted.back();
    } else {
        const auto lo = static_cast<std::size_t>(std::floor(position));
        const double frac = position - static_cast<double>(lo);
        tau = sorted[lo - 1] + frac * (sorted[lo] - sorted[lo - 1]);
    }
    return {tau, far};
}

bool verify(const FaceEmbedding& a, const FaceEmbedding& b, const VerificationThreshold& threshold) {
    return cosine_similarity(a, b) >= threshold.tau;
}

}  // namespace dualcloak
