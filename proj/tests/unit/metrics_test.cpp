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

#include <cmath>

#include "dualcloak/errors.hpp"
#include "dualcloak/metrics.hpp"
#include "test_util.hpp"

namespace dualcloak {
namespace {

using testing::random_image;

FeatureSet gaussian_sample(std::size_t n, std::size_t dim, double offset, Rng& rng) {
    FeatureSet out(n, std::vector<double>(dim));
    for (auto& row : out) {
        for (std::size_t j = 0; j < dim; ++j) row[j] = rng.normal() + (j == 0 ? offset : 0.0);
    }
    return out;
}

TEST(Fid, IdenticalSetsScoreZero) {
    Rng rng(81);
    const auto a = gaussian_sample(200, 5, 0.0, rng);
    EXPECT_NEAR(fid(a, a), 0.0, 1e-6);
}

TEST(Fid, Symmetric) {
    Rng rng(82);
    for (int t = 0; t < 5; ++t) {
        const auto a = gaussian_sample(60, 4, 0.0, rng);
        const auto b = gaussian_sample(80, 4, 0.7, rng);
        EXPECT_NEAR(fid(a, b), fid(b, a), 1e-6);
    }
}

TEST(Fid, InvariantUnderCommonRotation) {
    Rng rng(83);
    const auto a = gaussian_sample(100, 3, 0.0, rng);
    const auto b = gaussian_sample(100, 3, 1.2, rng);
    // Rotation about the z axis followed by one about the x axis.
    const double t1 = 0.7, t2 = -1.1;
    const double rz[3][3] = {{std::cos(t1), -std::sin(t1), 0}, {std::sin(t1), std::cos(t1), 0}, {0, 0, 1}};
    const double rx[3][3] = {{1, 0, 0}, {0, std::cos(t2), -std::sin(t2)}, {0, std::sin(t2), std::cos(t2)}};
    auto rotate = [&](const FeatureSet& s) {
        FeatureSet out = s;
        for (auto& row : out) {
            double tmp[3] = {0, 0, 0};
            for (int i = 0; i < 3; ++i) {
                for (int j = 0; j < 3; ++j) tmp[i] += rz[i][j] * row[j];
            }
            for (int i = 0; i < 3; ++i) {
                row[i] = 0;
                for (int j = 0; j < 3; ++j) row[i] += rx[i][j] * tmp[j];
            }
        }
        return out;
    };
    EXPECT_NEAR(fid(rotate(a), rotate(b)), fid(a, b), 1e-4);
}

TEST(Fid, GaussianMeanOffsetConvergesToSquaredDistance) {
    Rng rng(84);
    const double m = 1.5;
    const auto a = gaussian_sample(10000, 4, 0.0, rng);
    const auto b = gaussian_sample(10000, 4, m, rng);
    EXPECT_NEAR(fid(a, b), m * m, 0.05 * m * m);
}

TEST(Fid, RejectsEmptyOrRagged) {
    EXPECT_THROW(fid({}, {{1.0}}), ParameterError);
    EXPECT_THROW(fid({{1.0, 2.0}}, {{1.0}}), ParameterError);
}

TEST(Asr, IdenticalPairsAlwaysPass) {
    Rng rng(85);
    const auto model = testing::linear_model("h", {6, 6, 3}, 8, 3);
    std::vector<ImageTensor> imgs;
    for (int i = 0; i < 5; ++i) imgs.push_back(random_image({6, 6, 3}, rng));
    EXPECT_EQ(attack_success_rate(imgs, imgs, *model, {1.0, 0.01}), 1.0);
}

TEST(Asr, NoiseRarelyPassesNearOne) {
    Rng rng(86);
    const auto model = testing::linear_model("h", {6, 6, 3}, 16, 3);
    std::vector<ImageTensor> a, b;
    for (int i = 0; i < 20; ++i) {
        a.push_back(random_image({6, 6, 3}, rng));
        b.push_back(random_image({6, 6, 3}, rng));
    }
    EXPECT_EQ(attack_success_rate(a, b, *model, {0.999, 0.01}), 0.0);
}

TEST(Asr, CountsPassesAgainstOracle) {
    Rng rng(87);
    const auto model = testing::linear_model("h", {6, 6, 3}, 16, 4);
    std::vector<ImageTensor> a, b;
    for (int i = 0; i < 10; ++i) {
        a.push_back(random_image({6, 6, 3}, rng));
        b.push_back(random_image({6, 6, 3}, rng));
    }
    const auto cos = pair_cosines(a, b, *model);
    ASSERT_EQ(cos.size(), 10u);
    auto sorted = cos;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    // Threshold exactly at the third-highest cosine: three pairs pass.
    EXPECT_DOUBLE_EQ(attack_success_rate(a, b, *model, {sorted[2], 0.01}), 0.3);
}

TEST(Asr, MonotoneNonIncreasingInTau) {
    Rng rng(88);
    const auto model = testing::linear_model("h", {6, 6, 3}, 8, 5);
    std::vector<ImageTensor> a, b;
    for (int i = 0; i < 30; ++i) {
        a.push_back(random_image({6, 6, 3}, rng));
        b.push_back(random_image({6, 6, 3}, rng));
    }
    double prev = 1.0;
    for (double tau = -1.0; tau <= 1.0; tau += 0.05) {
        const double asr = attack_success_rate(a, b, *model, {tau, 0.01});
        EXPECT_LE(asr, prev);
        prev = asr;
    }
}

TEST(Asr, LengthMismatchIsParameterError) {
    Rng rng(89);
    const auto model = testing::linear_model("h", {6, 6, 3}, 8, 5);
    std::vector<ImageTensor> a{random_image({6, 6, 3}, rng)};
    std::vector<ImageTensor> b;
    EXPECT_THROW(attack_success_rate(a, b, *model, {0.5, 0.01}), ParameterError);
}

TEST(FeatureExtractor, DeterministicAndBounded) {
    Rng rng(90);
    const RandomProjectionExtractor ex({8, 8, 3}, 6, 42);
    const auto img = random_image({8, 8, 3}, rng);
    const auto f = ex.features(img);
    ASSERT_EQ(f.size(), 6u);
    EXPECT_EQ(ex.features(img), f);
    for (double v : f) EXPECT_LT(std::abs(v), 1.0);
    EXPECT_EQ(ex.features(random_image({12, 10, 3}, rng)).size(), 6u);
    EXPECT_NE(RandomProjectionExtractor({8, 8, 3}, 6, 43).features(img), f);
}

}  // namespace
}  // namespace dualcloak
