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

#include <cstdlib>

#include "dualcloak/errors.hpp"
#include "dualcloak/grid.hpp"
#include "dualcloak/synthetic.hpp"
#include "test_util.hpp"

namespace dualcloak {
namespace {

using testing::random_image;

std::filesystem::path data_dir() { return DUALCLOAK_TEST_DATA_DIR; }

std::vector<GridRow> fixture_rows() {
    const auto ids = make_identities(3, 0x9e1d);
    std::vector<GridRow> rows{{"clean", {}}, {"age-ftm 16/255", {}}};
    for (std::size_t i = 0; i < ids.size(); ++i) {
        FaceVariation plain;
        rows[0].images.push_back(render_face(ids[i], plain, 24).image);
        FaceVariation edited = plain;
        edited.smile = 1.0;
        edited.age = 0.6;
        rows[1].images.push_back(render_face(ids[i], edited, 24).image);
    }
    return rows;
}

TEST(Grid, SingleImageAddsLabelStripAndGutters) {
    Rng rng(101);
    const auto img = random_image({10, 12, 3}, rng);
    const GridLayout layout;
    const auto g = comparison_grid({{"x", {img}}}, layout);
    EXPECT_EQ(g.width(), 12 + 2 * layout.gutter);
    EXPECT_EQ(g.height(), layout.label_height + 10 + 2 * layout.gutter);
    const int top = layout.gutter + layout.label_height;
    for (int y = 0; y < 10; ++y) {
        for (int x = 0; x < 12; ++x) {
            for (int c = 0; c < 3; ++c) EXPECT_EQ(g.at(top + y, layout.gutter + x, c), img.at(y, x, c));
        }
    }
}

TEST(Grid, TwoByTwoLayoutArithmetic) {
    const ImageTensor img({7, 9, 3}, 0.5);
    const GridLayout layout{3, 9};
    const auto g = comparison_grid({{"a", {img, img}}, {"b", {img, img}}}, layout);
    EXPECT_EQ(g.width(), 2 * 9 + 3 * 3);
    EXPECT_EQ(g.height(), 2 * (9 + 7) + 3 * 3);
}

TEST(Grid, GrayImagesBecomeRgb) {
    const ImageTensor gray({4, 4, 1}, 0.25);
    const auto g = comparison_grid({{"", {gray}}});
    EXPECT_EQ(g.channels(), 3);
    const GridLayout layout;
    EXPECT_EQ(g.at(layout.gutter + layout.label_height, layout.gutter, 1), 0.25);
}

TEST(Grid, SizeMismatchAndEmptyInput) {
    EXPECT_THROW(comparison_grid({{"a", {ImageTensor({4, 4, 3}, 0.1), ImageTensor({5, 4, 3}, 0.1)}}}),
                 ParameterError);
    EXPECT_THROW(comparison_grid({}), ParameterError);
}

TEST(Grid, LabelsDrawInk) {
    const ImageTensor img({8, 40, 3}, 1.0);
    const auto blank = comparison_grid({{"", {img}}});
    const auto labelled = comparison_grid({{"FTM", {img}}});
    EXPECT_NE(blank, labelled);
    std::size_t dark = 0;
    for (double v : labelled.values()) dark += v == 0.0 ? 1 : 0;
    EXPECT_GT(dark, 0u);
}

TEST(Grid, FixtureMatchesGoldenPng) {
    const auto grid = comparison_grid(fixture_rows());
    const auto golden = data_dir() / "grid_golden.png";
    if (std::getenv("DUALCLOAK_UPDATE_GOLDEN") != nullptr) save_image(grid, golden);
    ASSERT_TRUE(std::filesystem::exists(golden)) << golden;
    // Compare after one PNG quantization, which is what the golden stores.
    EXPECT_EQ(decode_image(encode_png(grid)), load_image(golden));
}

}  // namespace
}  // namespace dualcloak
