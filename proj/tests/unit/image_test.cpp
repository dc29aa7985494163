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
#include "dualcloak/image.hpp"
#include "test_util.hpp"

namespace dualcloak {
namespace {

using testing::random_image;
using testing::TempDir;

// Direct 2D Gaussian convolution with reflect-101 borders written out
// explicitly, independent of the separable implementation.
std::vector<double> blur_oracle(const ImageTensor& img, int k, double sigma) {
    const int r = k / 2;
    std::vector<double> taps(static_cast<std::size_t>(k));
    double sum = 0.0;
    for (int i = 0; i < k; ++i) {
        taps[i] = std::exp(-0.5 * (i - r) * (i - r) / (sigma * sigma));
        sum += taps[i];
    }
    for (double& t : taps) t /= sum;
    auto reflect = [](int i, int n) {
        if (n == 1) return 0;
        const int period = 2 * (n - 1);
        i = ((i % period) + period) % period;
        return i < n ? i : period - i;
    };
    const Shape s = img.shape();
    std::vector<double> out(s.size(), 0.0);
    for (int y = 0; y < s.height; ++y) {
        for (int x = 0; x < s.width; ++x) {
            for (int c = 0; c < s.channels; ++c) {
                double acc = 0.0;
                for (int dy = -r; dy <= r; ++dy) {
                    for (int dx = -r; dx <= r; ++dx) {
                        acc += taps[dy + r] * taps[dx + r] *
                               img.at(reflect(y + dy, s.height), reflect(x + dx, s.width), c);
                    }
                }
                out[img.index(y, x, c)] = acc;
            }
        }
    }
    return out;
}

TEST(ImageTensor, RejectsOutOfRangeValues) {
    EXPECT_THROW(ImageTensor({1, 1, 1}, std::vector<double>{1.5}), ParameterError);
    EXPECT_THROW(ImageTensor({1, 1, 1}, std::vector<double>{std::nan("")}), ParameterError);
    EXPECT_THROW(ImageTensor({2, 2, 1}, std::vector<double>{0.1}), ParameterError);
}

TEST(ImageTensor, ClampedProjectsIntoUnitRange) {
    const auto img = ImageTensor::clamped({1, 4, 1}, {-0.5, 0.25, 2.0, std::nan("")});
    EXPECT_EQ(img.at(0, 0, 0), 0.0);
    EXPECT_EQ(img.at(0, 1, 0), 0.25);
    EXPECT_EQ(img.at(0, 2, 0), 1.0);
    EXPECT_EQ(img.at(0, 3, 0), 0.0);
}

TEST(Blur, ReflectIndexFoldsBothSides) {
    EXPECT_EQ(reflect_index(-1, 5), 1);
    EXPECT_EQ(reflect_index(-2, 5), 2);
    EXPECT_EQ(reflect_index(5, 5), 3);
    EXPECT_EQ(reflect_index(6, 5), 2);
    EXPECT_EQ(reflect_index(-9, 5), 1);
    EXPECT_EQ(reflect_index(3, 1), 0);
}

TEST(Blur, KernelIsNormalizedAndSymmetric) {
    const auto taps = gaussian_kernel_1d({19, 5.0});
    ASSERT_EQ(taps.size(), 19u);
    double sum = 0.0;
    for (double t : taps) sum += t;
    EXPECT_NEAR(sum, 1.0, 1e-12);
    for (int i = 0; i < 19; ++i) EXPECT_DOUBLE_EQ(taps[i], taps[18 - i]);
}

TEST(Blur, ConstantImageIsFixedPoint) {
    const ImageTensor img({9, 7, 3}, 0.37);
    const auto out = blur_values(img.view(), {19, 5.0});
    for (double v : out) EXPECT_NEAR(v, 0.37, 1e-12);
}

TEST(Blur, MatchesDirectConvolutionOracle) {
    Rng rng(7);
    for (const Shape shape : {Shape{12, 10, 3}, Shape{5, 6, 1}, Shape{3, 3, 3}}) {
        const auto img = random_image(shape, rng);
        const auto got = blur_values(img.view(), {19, 5.0});
        const auto want = blur_oracle(img, 19, 5.0);
        ASSERT_EQ(got.size(), want.size());
        for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-12) << to_string(shape);
    }
}

TEST(Blur, RejectsEvenKernelAndNonPositiveSigma) {
    EXPECT_THROW((BlurParams{4, 1.0}.validate()), ParameterError);
    EXPECT_THROW((BlurParams{5, 0.0}.validate()), ParameterError);
}

TEST(Resize, AdjointSatisfiesDotProductIdentity) {
    Rng rng(3);
    const Shape in{7, 5, 3};
    const Shape out{4, 9, 3};
    const auto x = random_image(in, rng);
    std::vector<double> y(out.size());
    for (double& v : y) v = rng.normal();
    const auto ax = resize_bilinear(x.view(), out.height, out.width);
    const auto aty = resize_bilinear_adjoint(y, out, in);
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) lhs += ax[i] * y[i];
    const auto xv = x.values();
    for (std::size_t i = 0; i < xv.size(); ++i) rhs += xv[i] * aty[i];
    EXPECT_NEAR(lhs, rhs, 1e-10);
}

TEST(Resize, SameSizeIsIdentity) {
    Rng rng(4);
    const auto x = random_image({6, 6, 3}, rng);
    const auto y = resize_bilinear(x.view(), 6, 6);
    const auto xv = x.values();
    for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(y[i], xv[i], 1e-15);
}

TEST(ImageIo, PngRoundTripIsExactOnByteGrid) {
    TempDir dir("io");
    Rng rng(11);
    std::vector<double> v(8 * 6 * 3);
    for (double& x : v) x = static_cast<double>(rng.below(256)) / 255.0;
    const ImageTensor img({8, 6, 3}, v);
    save_image(img, dir / "a.png");
    EXPECT_EQ(load_image(dir / "a.png"), img);
}

TEST(ImageIo, GrayscaleRoundTrip) {
    TempDir dir("io");
    const ImageTensor img({2, 2, 1}, std::vector<double>{0.0, 1.0, 128.0 / 255.0, 7.0 / 255.0});
    save_image(img, dir / "g.png");
    const auto back = load_image(dir / "g.png");
    EXPECT_EQ(back.channels(), 1);
    EXPECT_EQ(back, img);
}

TEST(ImageIo, MissingFileAndGarbageBytes) {
    EXPECT_THROW(load_image("/nonexistent/image.png"), Error);
    const std::vector<std::uint8_t> junk{1, 2, 3, 4, 5, 6, 7, 8};
    EXPECT_THROW(decode_image(junk), FormatError);
}

TEST(ImageOps, FlipIsAnInvolution) {
    Rng rng(5);
    const auto img = random_image({4, 5, 3}, rng);
    EXPECT_EQ(flip_horizontal(flip_horizontal(img)), img);
    EXPECT_EQ(flip_horizontal(img).at(1, 0, 2), img.at(1, 4, 2));
}


TEST(Blur, CenteredImpulseReproducesNormalizedKernel) {
    std::vector<double> v(39 * 39, 0.0);
    v[19 * 39 + 19] = 1.0;
    const ImageTensor img({39, 39, 1}, v);
    const auto out = blur_values(img.view(), {19, 5.0});
    double norm = 0.0;
    for (int i = -9; i <= 9; ++i) {
        for (int j = -9; j <= 9; ++j) norm += std::exp(-(i * i + j * j) / 50.0);
    }
    for (int y = 0; y < 39; ++y) {
        for (int x = 0; x < 39; ++x) {
            const int i = y - 19, j = x - 19;
            const double want = (std::abs(i) <= 9 && std::abs(j) <= 9) ? std::exp(-(i * i + j * j) / 50.0) / norm : 0.0;
            EXPECT_NEAR(out[static_cast<std::size_t>(y * 39 + x)], want, 1e-12);
        }
    }
}

TEST(Blur, IsLinearBeforeClamping) {
    Rng rng(21);
    const Shape s{10, 11, 3};
    const auto x = random_image(s, rng);
    const auto y = random_image(s, rng);
    const double a = 0.3, b = -1.7;
    const auto bx = blur_values(x.view(), {});
    const auto by = blur_values(y.view(), {});
    std::vector<double> mix(s.size());
    for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = a * x.values()[i] + b * y.values()[i];
    const auto bmix = blur_values(ImageView{s, mix}, {});
    for (std::size_t i = 0; i < mix.size(); ++i) EXPECT_NEAR(bmix[i], a * bx[i] + b * by[i], 1e-6);
}

TEST(Blur, CommutesWithHorizontalFlip) {
    Rng rng(22);
    const auto x = random_image({9, 13, 3}, rng);
    const auto lhs = flip_horizontal(gaussian_blur(x, {}));
    const auto rhs = gaussian_blur(flip_horizontal(x), {});
    for (std::size_t i = 0; i < lhs.values().size(); ++i) EXPECT_NEAR(lhs.values()[i], rhs.values()[i], 1e-6);
}

TEST(ImageOps, Clamp01Examples) {
    const auto out = clamp01(std::vector<double>{1.3, -0.2, 0.7});
    EXPECT_EQ(out, (std::vector<double>{1.0, 0.0, 0.7}));
}

TEST(ImageIo, ByteValuesMapToUnitRange) {
    TempDir dir("io");
    save_gray_png({1, 3, {0, 128, 255}}, dir / "b.png");
    const auto img = load_image(dir / "b.png");
    EXPECT_EQ(img.at(0, 0, 0), 0.0);
    EXPECT_DOUBLE_EQ(img.at(0, 1, 0), 128.0 / 255.0);
    EXPECT_EQ(img.at(0, 2, 0), 1.0);
}

TEST(ImageIo, RandomImageQuantizesToNearestByte) {
    TempDir dir("io");
    Rng rng(12);
    const auto img = random_image({16, 9, 3}, rng);
    save_image(img, dir / "r.png");
    const auto once = load_image(dir / "r.png");
    for (std::size_t i = 0; i < img.values().size(); ++i) {
        const double v = img.values()[i];
        EXPECT_LE(std::abs(once.values()[i] - v), 1.0 / 510.0 + 1e-12);
        EXPECT_DOUBLE_EQ(once.values()[i], std::round(v * 255.0) / 255.0);
    }
    save_image(once, dir / "r2.png");
    EXPECT_EQ(load_image(dir / "r2.png"), once);
}

TEST(ImageIo, UnwritableDirectoryIsIoError) {
    if (::geteuid() == 0) GTEST_SKIP() << "permission bits do not bind root";
    TempDir dir("ro");
    std::filesystem::permissions(dir.path(), std::filesystem::perms::owner_read | std::filesystem::perms::owner_exec);
    EXPECT_THROW(save_image(ImageTensor({2, 2, 3}, 0.5), dir / "x.png"), IoError);
    std::filesystem::permissions(dir.path(), std::filesystem::perms::owner_all);
}

TEST(ImageIo, MissingParentDirectoryIsIoError) {
    EXPECT_THROW(save_image(ImageTensor({2, 2, 3}, 0.5), "/nonexistent-dir/x.png"), IoError);
}

}  // namespace
}  // namespace dualcloak
