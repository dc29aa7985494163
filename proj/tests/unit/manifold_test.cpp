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
#include "dualcloak/manifold.hpp"
#include "dualcloak/synthetic.hpp"
#include "test_util.hpp"

namespace dualcloak {
namespace {

using testing::random_image;
using testing::TempDir;

std::vector<ImageTensor> face_images(int identities, int per_identity, std::uint64_t seed, int size = 16) {
    std::vector<ImageTensor> out;
    for (const auto& d : make_labeled_set(make_identities(identities, seed), per_identity, seed + 1, size)) {
        out.push_back(d.image);
    }
    return out;
}

TEST(Attribute, FromRawNormalizes) {
    const auto a = AttributeDirection::from_raw("age", {3.0, 4.0}, -2.0);
    EXPECT_NEAR(a.direction[0], 0.6, 1e-15);
    EXPECT_NEAR(a.direction[1], 0.8, 1e-15);
    EXPECT_EQ(a.strength, -2.0);
    EXPECT_NO_THROW(a.validate());
    EXPECT_THROW(AttributeDirection::from_raw("z", {0.0, 0.0}, 1.0), ParameterError);
    AttributeDirection bad{"b", {1.0, 1.0}, 1.0};
    EXPECT_THROW(bad.validate(), ParameterError);
}

TEST(Attribute, JsonRoundTrip) {
    TempDir dir("attr");
    const auto a = AttributeDirection::from_raw("smile", {1.0, -2.0, 0.5}, 0.75);
    save_attribute(a, dir / "a.json");
    const auto b = load_attribute(dir / "a.json");
    EXPECT_EQ(b.name, "smile");
    EXPECT_EQ(b.strength, 0.75);
    ASSERT_EQ(b.dim(), 3u);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(b.direction[i], a.direction[i]);
}

TEST(Schedule, LinearRamp) {
    const auto a = AttributeDirection::from_raw("age", {1.0, 2.0, -2.0}, 1.5);
    const auto full = attribute_schedule(a, 10, 10);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(full[i], 1.5 * a.direction[i]);
    for (double v : attribute_schedule(a, 0, 10)) EXPECT_EQ(v, 0.0);
    const auto half = attribute_schedule(a, 5, 10);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(half[i], 0.5 * full[i]);
    for (int n = 1; n <= 12; ++n) {
        const auto end = attribute_schedule(a, n, n);
        for (int k = 0; k <= n; ++k) {
            const auto step = attribute_schedule(a, k, n);
            for (std::size_t i = 0; i < 3; ++i) {
                EXPECT_EQ(step[i], (static_cast<double>(k) / n) * end[i]) << "k=" << k << " n=" << n;
            }
        }
    }
    EXPECT_THROW(attribute_schedule(a, 0, 0), ParameterError);
    EXPECT_THROW(attribute_schedule(a, 11, 10), ParameterError);
}

TEST(ToyIdentity, EncodeIsFlattenAndDecodeInverts) {
    Rng rng(51);
    const Shape s{5, 4, 3};
    const ToyIdentityGenerator gen(s);
    const auto x = random_image(s, rng);
    const auto z = encode(gen, x);
    EXPECT_EQ(z.values, std::vector<double>(x.values().begin(), x.values().end()));
    EXPECT_EQ(encode(gen, x), z);
    EXPECT_EQ(decode(gen, z, AttributeDirection::none(z.size()), 1.0), x);
}

TEST(ToyIdentity, AttributeShiftsOnePixel) {
    const Shape s{2, 2, 1};
    const ToyIdentityGenerator gen(s);
    const ImageTensor x({2, 2, 1}, std::vector<double>{0.2, 0.4, 0.6, 0.8});
    const auto a = AttributeDirection::from_raw("e1", {1.0, 0.0, 0.0, 0.0}, 0.1);
    const auto out = decode(gen, encode(gen, x), a, 1.0);
    EXPECT_NEAR(out.values()[0], 0.3, 1e-15);
    for (std::size_t i = 1; i < 4; ++i) EXPECT_EQ(out.values()[i], x.values()[i]);
    EXPECT_EQ(decode(gen, encode(gen, x), a, 0.0), x);
}

TEST(ToyIdentity, RejectsWrongShape) {
    const ToyIdentityGenerator gen({4, 4, 3});
    EXPECT_THROW(encode(gen, ImageTensor({3, 4, 3}, 0.5)), ManifoldError);
}

class ToyDecoderTest : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        images_ = new std::vector<ImageTensor>(face_images(12, 6, 77));
        gen_ = new ToyDecoderGenerator(ToyDecoderGenerator::fit(*images_, 16));
    }
    static void TearDownTestSuite() {
        delete gen_;
        delete images_;
    }
    static std::vector<ImageTensor>* images_;
    static ToyDecoderGenerator* gen_;
};

std::vector<ImageTensor>* ToyDecoderTest::images_ = nullptr;
ToyDecoderGenerator* ToyDecoderTest::gen_ = nullptr;

TEST_F(ToyDecoderTest, ShapesAndDeterminism) {
    EXPECT_EQ(gen_->latent_dim(), 16u);
    EXPECT_EQ(gen_->output_shape(), (*images_)[0].shape());
    const auto z = encode(*gen_, (*images_)[0]);
    EXPECT_EQ(z.size(), 16u);
    EXPECT_EQ(encode(*gen_, (*images_)[0]), z);
    EXPECT_EQ(decode(*gen_, z, AttributeDirection::none(16), 1.0).shape(), (*images_)[0].shape());
}

TEST_F(ToyDecoderTest, ReconstructsTrainingFaces) {
    // Pinned from the fitted 16-component decoder on this fixture.
    constexpr double kMeanAbsBound = 0.05;
    double total = 0.0;
    std::size_t count = 0;
    for (const auto& img : *images_) {
        const auto rec = decode(*gen_, encode(*gen_, img), AttributeDirection::none(16), 1.0);
        for (std::size_t i = 0; i < img.values().size(); ++i) {
            total += std::abs(rec.values()[i] - img.values()[i]);
            ++count;
        }
    }
    EXPECT_LT(total / static_cast<double>(count), kMeanAbsBound);
}

TEST_F(ToyDecoderTest, LatentGradientMatchesFiniteDifferences) {
    Rng rng(52);
    const auto z = encode(*gen_, (*images_)[3]).values;
    std::vector<double> upstream(gen_->output_shape().size());
    for (auto& u : upstream) u = rng.normal();
    const auto g = gen_->backprop(z, upstream);
    auto objective = [&](const std::vector<double>& latent) {
        const auto out = gen_->generate(latent);
        double v = 0.0;
        for (std::size_t i = 0; i < upstream.size(); ++i) v += upstream[i] * out.values()[i];
        return v;
    };
    double err = 0.0, scale = 0.0;
    auto p = z;
    for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] = z[i] + 1e-5;
        const double up = objective(p);
        p[i] = z[i] - 1e-5;
        const double down = objective(p);
        p[i] = z[i];
        const double fd = (up - down) / 2e-5;
        err = std::max(err, std::abs(fd - g[i]));
        scale = std::max(scale, std::abs(fd));
    }
    EXPECT_LT(err / scale, 1e-4);
}

TEST_F(ToyDecoderTest, SaveLoadRoundTrip) {
    TempDir dir("decoder");
    gen_->save(dir / "d.json");
    const auto back = ToyDecoderGenerator::load(dir / "d.json");
    const auto z = encode(*gen_, (*images_)[1]);
    EXPECT_EQ(encode(back, (*images_)[1]), z);
    EXPECT_EQ(back.generate(z.values), gen_->generate(z.values));
}

TEST_F(ToyDecoderTest, AttributeOffsetIsAdditive) {
    const auto z = encode(*gen_, (*images_)[2]);
    const auto a = AttributeDirection::from_raw("x", std::vector<double>(16, 1.0), 0.4);
    std::vector<double> shifted = z.values;
    for (std::size_t i = 0; i < 16; ++i) shifted[i] += 0.4 * a.direction[i] * 0.5;
    EXPECT_EQ(decode(*gen_, z, a, 0.5), gen_->generate(shifted));
}

}  // namespace
}  // namespace dualcloak
