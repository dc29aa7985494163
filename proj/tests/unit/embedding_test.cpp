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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "dualcloak/convnet.hpp"
#include "dualcloak/errors.hpp"
#include "dualcloak/embedding.hpp"
#include "test_util.hpp"

namespace dualcloak {
namespace {

using testing::linear_ensemble;
using testing::random_image;

// Sort, then scan the plotting positions p_k = (k - 0.5) / n for the pair
// bracketing q = 1 - far and interpolate between them.
double quantile_oracle(std::vector<double> scores, double far) {
    std::sort(scores.begin(), scores.end());
    const std::size_t n = scores.size();
    const double q = 1.0 - far;
    auto p = [n](std::size_t k) { return (static_cast<double>(k) - 0.5) / static_cast<double>(n); };
    if (q <= p(1)) return scores.front();
    if (q >= p(n)) return scores.back();
    for (std::size_t k = 1; k < n; ++k) {
        if (q >= p(k) && q <= p(k + 1)) {
            const double w = (q - p(k)) / (p(k + 1) - p(k));
            return scores[k - 1] + w * (scores[k] - scores[k - 1]);
        }
    }
    return scores.back();
}

TEST(Cosine, AnalyticValues) {
    EXPECT_DOUBLE_EQ(cosine_similarity({{1, 2, 3}}, {{1, 2, 3}}), 1.0);
    EXPECT_DOUBLE_EQ(cosine_similarity({{1, 0}}, {{0, 1}}), 0.0);
    EXPECT_NEAR(cosine_similarity({{1, 0}}, {{1, 1}}), 1.0 / std::sqrt(2.0), 1e-15);
    EXPECT_THROW(cosine_similarity({{1, 0}}, {{1, 0, 0}}), ParameterError);
    EXPECT_THROW(cosine_similarity({{0, 0}}, {{1, 0}}), DegenerateEmbeddingError);
}

TEST(Cosine, ScaleInvariant) {
    Rng rng(41);
    for (int t = 0; t < 50; ++t) {
        FaceEmbedding a{std::vector<double>(6)}, b{std::vector<double>(6)};
        for (auto& v : a.values) v = rng.normal();
        for (auto& v : b.values) v = rng.normal();
        const double c = rng.uniform(0.01, 100.0);
        FaceEmbedding ca = a;
        for (auto& v : ca.values) v *= c;
        EXPECT_NEAR(cosine_similarity(ca, b), cosine_similarity(a, b), 1e-6);
    }
}

TEST(Cosine, GradientMatchesFiniteDifferences) {
    Rng rng(42);
    FaceEmbedding a{std::vector<double>(5)}, b{std::vector<double>(5)};
    for (auto& v : a.values) v = rng.normal();
    for (auto& v : b.values) v = rng.normal();
    const auto g = cosine_similarity_gradient(a, b);
    for (std::size_t i = 0; i < 5; ++i) {
        FaceEmbedding p = a, m = a;
        p.values[i] += 1e-6;
        m.values[i] -= 1e-6;
        EXPECT_NEAR(g[i], (cosine_similarity(p, b) - cosine_similarity(m, b)) / 2e-6, 1e-7);
    }
}

TEST(ToyLinear, MatchesMatrixProduct) {
    const std::vector<double> a{1, 2, 3, 4, -1, 0.5, 0, 2};
    const ToyLinearEmbedder model("m", {2, 2, 1}, 2, a);
    const ImageTensor x({2, 2, 1}, std::vector<double>{0.1, 0.2, 0.3, 0.4});
    const auto e = embed(model, x);
    ASSERT_EQ(e.size(), 2u);
    EXPECT_NEAR(e.values[0], 0.1 + 0.4 + 0.9 + 1.6, 1e-15);
    EXPECT_NEAR(e.values[1], -0.1 + 0.1 + 0.0 + 0.8, 1e-15);
    EXPECT_EQ(embed(model, x), e);
}

TEST(ToyLinear, DeclaredDimension) {
    const ToyLinearEmbedder model("m", {8, 8, 3}, 128, 5);
    Rng rng(1);
    EXPECT_EQ(embed(model, random_image({8, 8, 3}, rng)).size(), 128u);
    // Other sizes are resampled to the native shape.
    EXPECT_EQ(embed(model, random_image({5, 11, 3}, rng)).size(), 128u);
}

TEST(EnsembleDistance, KnownValues) {
    Rng rng(43);
    const auto ens = linear_ensemble({4, 4, 3}, 3, 100);
    const auto x = random_image({4, 4, 3}, rng);
    EXPECT_NEAR(ensemble_distance(ens, x, x), 0.0, 1e-6);

    // Two-dim embeddings with prescribed cosines per member.
    auto member = [](double cos) {
        const double s = std::sqrt(1.0 - cos * cos);
        // Rows map pixel 0 to (1, 0) and pixel 1 to (cos, sin).
        return std::make_shared<ToyLinearEmbedder>("m", Shape{1, 2, 1}, 2, std::vector<double>{1, cos, 0, s});
    };
    const EmbedderEnsemble three({member(0.5), member(0.2), member(-0.1)});
    const ImageTensor e0({1, 2, 1}, std::vector<double>{1.0, 0.0});
    const ImageTensor e1({1, 2, 1}, std::vector<double>{0.0, 1.0});
    EXPECT_NEAR(ensemble_distance(three, e0, e1), 2.4, 1e-12);

    const EmbedderEnsemble ortho({std::make_shared<ToyLinearEmbedder>("o", Shape{1, 2, 1}, 2,
                                                                      std::vector<double>{1, 0, 0, 1})});
    EXPECT_NEAR(ensemble_distance(ortho, e0, e1), 1.0, 1e-12);
}

TEST(EnsembleDistance, GradientMatchesCentralDifferences) {
    Rng rng(44);
    for (int trial = 0; trial < 20; ++trial) {
        const Shape s{8, 8, 1};
        const auto ens = linear_ensemble(s, 3, 200 + static_cast<std::uint64_t>(trial));
        const auto x = random_image(s, rng);
        const auto t = random_image(s, rng);
        const auto targets = embed_all(ens, t.view());
        const auto got = ensemble_distance_with_gradient(ens, x.view(), targets);
        std::vector<double> p(x.values().begin(), x.values().end());
        double err = 0.0, scale = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double keep = p[i];
            p[i] = keep + 1e-5;
            const double up = ensemble_distance_to(ens, ImageView{s, p}, targets);
            p[i] = keep - 1e-5;
            const double down = ensemble_distance_to(ens, ImageView{s, p}, targets);
            p[i] = keep;
            const double fd = (up - down) / 2e-5;
            err = std::max(err, std::abs(fd - got.gradient[i]));
            scale = std::max(scale, std::abs(fd));
        }
        EXPECT_LT(err / scale, 1e-4);
        EXPECT_NEAR(got.value, ensemble_distance(ens, x, t), 1e-12);
    }
}

TEST(Calibration, EvenlySpacedScores) {
    std::vector<double> scores;
    for (int i = 0; i < 100; ++i) scores.push_back(i / 100.0);
    const auto thr = calibrate_threshold(scores, 0.01);
    EXPECT_NEAR(thr.tau, 0.985, 1e-12);
    EXPECT_EQ(thr.far, 0.01);
    EXPECT_DOUBLE_EQ(calibrate_threshold(scores, 1.0).tau, 0.0);
    const std::vector<double> flat(17, 0.3);
    EXPECT_DOUBLE_EQ(calibrate_threshold(flat, 0.05).tau, 0.3);
}

TEST(Calibration, MatchesSortAndInterpolateOracle) {
    Rng rng(45);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto n = 1 + rng.below(300);
        std::vector<double> scores(n);
        for (auto& s : scores) s = rng.uniform(-1.0, 1.0);
        const double far = rng.uniform(1e-4, 1.0);
        EXPECT_NEAR(calibrate_threshold(scores, far).tau, quantile_oracle(scores, far), 1e-9);
    }
}

TEST(Calibration, MonotoneInFar) {
    Rng rng(46);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> scores(1 + rng.below(100));
        for (auto& s : scores) s = rng.uniform(-1.0, 1.0);
        double prev = 2.0;
        for (double far : {0.001, 0.01, 0.05, 0.1, 0.3, 0.5, 0.9, 1.0}) {
            const double tau = calibrate_threshold(scores, far).tau;
            EXPECT_LE(tau, prev);
            prev = tau;
        }
    }
}

TEST(Calibration, RejectsBadInput) {
    const std::vector<double> scores{0.1, 0.2};
    EXPECT_THROW(calibrate_threshold({}, 0.01), ParameterError);
    EXPECT_THROW(calibrate_threshold(scores, 0.0), ParameterError);
    EXPECT_THROW(calibrate_threshold(scores, 1.5), ParameterError);
}

TEST(Verify, InclusiveThreshold) {
    const FaceEmbedding a{{1, 0}}, b{{1, 1}};
    EXPECT_TRUE(verify(a, a, {1.0, 0.01}));
    EXPECT_FALSE(verify({{1, 0}}, {{0, 1}}, {0.5, 0.01}));
    const double c = cosine_similarity(a, b);
    EXPECT_TRUE(verify(a, b, {c, 0.01}));
    EXPECT_FALSE(verify(a, b, {std::nextafter(c, 2.0), 0.01}));
}

TEST(ToyConvNet, BackpropMatchesFiniteDifferences) {
    ConvNetArch arch;
    arch.input = {12, 12, 3};
    arch.channels = {4, 6};
    arch.embed_dim = 5;
    const ToyConvNet net("conv", arch, 9);
    Rng rng(47);
    const auto x = random_image(arch.input, rng);
    std::vector<double> upstream(5);
    for (auto& u : upstream) u = rng.normal();
    const auto g = net.backprop(x.view(), upstream);
    auto objective = [&](const std::vector<double>& px) {
        const auto e = net.embed(ImageView{arch.input, px});
        double v = 0.0;
        for (std::size_t i = 0; i < 5; ++i) v += e.values[i] * upstream[i];
        return v;
    };
    std::vector<double> p(x.values().begin(), x.values().end());
    double err = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < p.size(); i += 7) {
        const double keep = p[i];
        p[i] = keep + 1e-5;
        const double up = objective(p);
        p[i] = keep - 1e-5;
        const double down = objective(p);
        p[i] = keep;
        const double fd = (up - down) / 2e-5;
        err = std::max(err, std::abs(fd - g[i]));
        scale = std::max(scale, std::abs(fd));
    }
    EXPECT_LT(err / scale, 1e-4);
}

TEST(ToyConvNet, TrainingSeparatesIdentities) {
    ConvNetArch arch;
    arch.input = {8, 8, 3};
    arch.channels = {4, 4};
    arch.embed_dim = 8;
    ToyConvNet net("conv", arch, 3);
    Rng rng(48);
    // Four identities: noisy copies of four random prototypes.
    std::vector<ImageTensor> protos;
    for (int i = 0; i < 4; ++i) protos.push_back(random_image(arch.input, rng));
    std::vector<LabeledImage> data;
    for (int i = 0; i < 4; ++i) {
        for (int k = 0; k < 12; ++k) {
            std::vector<double> v(protos[i].values().begin(), protos[i].values().end());
            for (auto& x : v) x += rng.normal(0.0, 0.03);
            data.push_back({ImageTensor::clamped(arch.input, v), i});
        }
    }
    ConvNetTraining opts;
    opts.epochs = 15;
    opts.batch_size = 8;
    const auto losses = net.train(data, 4, opts);
    ASSERT_EQ(losses.size(), 15u);
    EXPECT_LT(losses.back(), losses.front());
}

TEST(ToyConvNet, SaveLoadRoundTrip) {
    testing::TempDir dir("conv");
    ConvNetArch arch;
    arch.input = {8, 8, 3};
    arch.channels = {4};
    arch.embed_dim = 6;
    const ToyConvNet net("conv-x", arch, 5);
    net.save(dir / "net.json");
    const auto back = ToyConvNet::load(dir / "net.json");
    EXPECT_EQ(back.name(), "conv-x");
    EXPECT_EQ(back.arch(), arch);
    EXPECT_EQ(back.parameters(), net.parameters());
}

}  // namespace
}  // namespace dualcloak
