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
#include "dualcloak/texture.hpp"
#include "test_util.hpp"

namespace dualcloak {
namespace {

using testing::random_image;
using testing::TempDir;

constexpr std::uint8_t kHair = 17;

LabelMap uniform_labels(int h, int w, std::uint8_t label) {
    return {h, w, std::vector<std::uint8_t>(static_cast<std::size_t>(h) * w, label)};
}

BinaryMask random_mask(int h, int w, Rng& rng) {
    BinaryMask m = BinaryMask::filled(h, w, false);
    for (auto& b : m.bits) b = rng.below(2) ? 1 : 0;
    return m;
}

// |x - blur(x)| computed by direct 2D convolution, then the channel maximum.
std::vector<double> high_freq_oracle(const ImageTensor& img, int k, double sigma) {
    const int r = k / 2;
    auto reflect = [](int i, int n) {
        if (n == 1) return 0;
        const int period = 2 * (n - 1);
        i = ((i % period) + period) % period;
        return i < n ? i : period - i;
    };
    double norm = 0.0;
    for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) norm += std::exp(-(dy * dy + dx * dx) / (2 * sigma * sigma));
    }
    const Shape s = img.shape();
    std::vector<double> out(s.pixels(), 0.0);
    for (int y = 0; y < s.height; ++y) {
        for (int x = 0; x < s.width; ++x) {
            double best = 0.0;
            for (int c = 0; c < s.channels; ++c) {
                double acc = 0.0;
                for (int dy = -r; dy <= r; ++dy) {
                    for (int dx = -r; dx <= r; ++dx) {
                        acc += std::exp(-(dy * dy + dx * dx) / (2 * sigma * sigma)) / norm *
                               img.at(reflect(y + dy, s.height), reflect(x + dx, s.width), c);
                    }
                }
                best = std::max(best, std::abs(img.at(y, x, c) - std::clamp(acc, 0.0, 1.0)));
            }
            out[static_cast<std::size_t>(y) * s.width + x] = best;
        }
    }
    return out;
}

TEST(HighFreq, ConstantImageHasNoTexture) {
    const auto map = high_freq(ImageTensor({16, 16, 3}, 0.42), {});
    for (double v : map.values) EXPECT_NEAR(v, 0.0, 1e-12);
    EXPECT_EQ(texture_mask(ImageTensor({16, 16, 3}, 0.42), 0.003, {}).popcount(), 0u);
}

TEST(HighFreq, StepEdgeIsLocalized) {
    std::vector<double> v(64 * 64);
    for (int y = 0; y < 64; ++y) {
        for (int x = 0; x < 64; ++x) v[static_cast<std::size_t>(y * 64 + x)] = x >= 32 ? 1.0 : 0.0;
    }
    const ImageTensor img({64, 64, 1}, v);
    const auto map = high_freq(img, {});
    const auto oracle = high_freq_oracle(img, 19, 5.0);
    for (int y = 0; y < 64; ++y) {
        for (int x = 0; x < 64; ++x) {
            const double got = map.values[static_cast<std::size_t>(y * 64 + x)];
            EXPECT_NEAR(got, oracle[static_cast<std::size_t>(y * 64 + x)], 1e-9);
            // Only pixels within the kernel radius of the edge see both sides.
            if (x < 32 - 9 || x >= 32 + 9) {
                EXPECT_NEAR(got, 0.0, 1e-12) << "x=" << x;
            } else {
                EXPECT_GT(got, 0.0) << "x=" << x;
            }
        }
    }
}

TEST(HighFreq, MatchesOracleOnRandomImages) {
    Rng rng(31);
    for (int trial = 0; trial < 3; ++trial) {
        const auto img = random_image({10, 12, 3}, rng);
        const auto map = high_freq(img, {7, 2.0});
        const auto oracle = high_freq_oracle(img, 7, 2.0);
        for (std::size_t i = 0; i < oracle.size(); ++i) {
            EXPECT_NEAR(map.values[i], oracle[i], 1e-9);
            EXPECT_GE(map.values[i], 0.0);
            EXPECT_LE(map.values[i], 1.0);
        }
    }
}

TEST(TextureMask, ZeroGammaMarksEveryNonzeroPixel) {
    Rng rng(32);
    const auto img = random_image({8, 8, 3}, rng);
    const auto map = high_freq(img, {});
    const auto mask = texture_mask(img, 0.0, {});
    for (std::size_t i = 0; i < map.values.size(); ++i) EXPECT_EQ(mask.bits[i], map.values[i] > 0.0 ? 1 : 0);
}

TEST(TextureMask, ThresholdIsStrict) {
    Rng rng(33);
    const auto img = random_image({8, 8, 3}, rng);
    const auto map = high_freq(img, {});
    const double gamma = map.values[5];
    const auto mask = texture_mask(img, gamma, {});
    EXPECT_EQ(mask.bits[5], 0);
}

TEST(TextureMask, ShrinksAsGammaGrows) {
    Rng rng(34);
    for (int trial = 0; trial < 20; ++trial) {
        const auto img = random_image({12, 12, 3}, rng, 0.2, 0.8);
        const double g1 = rng.uniform(0.0, 0.2);
        const double g2 = g1 + rng.uniform(0.0, 0.2);
        EXPECT_TRUE(texture_mask(img, g2, {}).subset_of(texture_mask(img, g1, {})));
    }
}

TEST(HairMask, CountsHairPixels) {
    EXPECT_EQ(hair_mask(uniform_labels(4, 5, 1), kHair).popcount(), 0u);
    EXPECT_EQ(hair_mask(uniform_labels(4, 5, kHair), kHair).popcount(), 20u);

    // 40% hair: the first 40 of 100 pixels.
    auto labels = uniform_labels(10, 10, 1);
    for (int i = 0; i < 40; ++i) labels.labels[static_cast<std::size_t>(i)] = kHair;
    EXPECT_EQ(hair_mask(labels, kHair).popcount(), 40u);

    // Checkerboard with hair on (0,0): ceil(HW/2) pixels.
    for (const auto [h, w] : {std::pair{5, 7}, std::pair{4, 4}, std::pair{3, 3}}) {
        auto board = uniform_labels(h, w, 1);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                if ((x + y) % 2 == 0) board.labels[static_cast<std::size_t>(y * w + x)] = kHair;
            }
        }
        EXPECT_EQ(hair_mask(board, kHair).popcount(), static_cast<std::size_t>((h * w + 1) / 2));
    }
}

TEST(HairMask, RejectsLabelOutsideVocabulary) {
    EXPECT_THROW(hair_mask(uniform_labels(2, 2, 1), 200), ParameterError);
}

TEST(CombineMasks, MatchesPixelwiseAnd) {
    Rng rng(35);
    for (int trial = 0; trial < 20; ++trial) {
        const auto a = random_mask(9, 11, rng);
        const auto b = random_mask(9, 11, rng);
        const auto c = combine_masks(a, b);
        for (std::size_t i = 0; i < c.bits.size(); ++i) EXPECT_EQ(c.bits[i], a.bits[i] & b.bits[i]);
        EXPECT_TRUE(c.subset_of(a));
        EXPECT_TRUE(c.subset_of(b));
        EXPECT_EQ(combine_masks(a, a), a);
    }
}

TEST(CombineMasks, IdentityAndDisjoint) {
    Rng rng(36);
    const auto t = random_mask(6, 6, rng);
    EXPECT_EQ(combine_masks(t, BinaryMask::filled(6, 6, true)), t);
    BinaryMask inverse = t;
    for (auto& b : inverse.bits) b = b ? 0 : 1;
    EXPECT_EQ(combine_masks(t, inverse).popcount(), 0u);
    EXPECT_THROW(combine_masks(t, BinaryMask::filled(5, 6, true)), ParameterError);
}

TEST(MaskIo, RoundTripsAsZeroAnd255) {
    TempDir dir("mask");
    Rng rng(37);
    const auto m = random_mask(7, 5, rng);
    save_mask(m, dir / "m.png");
    EXPECT_EQ(load_mask(dir / "m.png"), m);
    const auto plane = load_byte_plane(dir / "m.png");
    for (std::size_t i = 0; i < plane.values.size(); ++i) EXPECT_EQ(plane.values[i], m.bits[i] ? 255 : 0);
}

TEST(FixtureParser, ReturnsAnnotationVerbatim) {
    TempDir dir("parser");
    Rng rng(38);
    LabelMap labels{6, 4, {}};
    for (int i = 0; i < 24; ++i) labels.labels.push_back(static_cast<std::uint8_t>(rng.below(19)));
    save_label_map(labels, dir / "face.png");
    const FixtureParser parser(dir.path());
    const auto parsed = parse_face(parser, ImageTensor({6, 4, 3}, 0.5), "face");
    EXPECT_EQ(parsed.labels, labels.labels);
    EXPECT_EQ(parsed.height, 6);
    EXPECT_EQ(parsed.width, 4);
}

TEST(FixtureParser, InMemoryAnnotations) {
    FixtureParser parser;
    parser.add("a", uniform_labels(3, 3, kHair));
    const auto mask = hair_mask(parse_face(parser, ImageTensor({3, 3, 3}, 0.1), "a"), parser.label_set().hair_label);
    EXPECT_EQ(mask.popcount(), 9u);
}

TEST(FixtureParser, FailuresSurfaceAsParseError) {
    FixtureParser parser;
    EXPECT_THROW(parse_face(parser, ImageTensor({3, 3, 3}, 0.1), "missing"), ParseError);
    parser.add("small", uniform_labels(2, 2, 1));
    EXPECT_THROW(parse_face(parser, ImageTensor({3, 3, 3}, 0.1), "small"), ParseError);
    parser.add("bad", uniform_labels(3, 3, 99));
    EXPECT_THROW(parse_face(parser, ImageTensor({3, 3, 3}, 0.1), "bad"), ParseError);
}

TEST(LabelSet, CelebAMaskVocabularyHasHairAt17) {
    const auto& set = celebamask_label_set();
    EXPECT_EQ(set.hair_label, 17);
    EXPECT_EQ(set.labels.size(), 19u);
    EXPECT_TRUE(set.contains(0));
    EXPECT_FALSE(set.contains(19));
}

}  // namespace
}  // namespace dualcloak
