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

#include "dualcloak/grid.hpp"

#include <array>
#include <cctype>
#include <cstdint>

#include "dualcloak/errors.hpp"

namespace dualcloak {

namespace {

using Glyph = std::array<std::uint8_t, 7>;  // rows top to bottom, bit 4 = leftmost column

struct GlyphEntry {
    char c;
    Glyph rows;
};

constexpr GlyphEntry kFont[] = {
    {' ', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00}}, {'0', {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}},
    {'1', {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E}}, {'2', {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}},
    {'3', {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E}}, {'4', {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}},
    {'5', {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E}}, {'6', {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}},
    {'7', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}}, {'8', {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}},
    {'9', {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}}, {'A', {0x0E, 0x11, 0x11, 0x11, 0x1F, 0x11, 0x11}},
    {'B', {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E}}, {'C', {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E}},
    {'D', {0x1C, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1C}}, {'E', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F}},
    {'F', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10}}, {'G', {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F}},
    {'H', {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}}, {'I', {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}},
    {'J', {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C}}, {'K', {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}},
    {'L', {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F}}, {'M', {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11}},
    {'N', {0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11}}, {'O', {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
    {'P', {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10}}, {'Q', {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D}},
    {'R', {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11}}, {'S', {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E}},
    {'T', {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04}}, {'U', {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
    {'V', {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04}}, {'W', {0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A}},
    {'X', {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11}}, {'Y', {0x11, 0x11, 0x11, 0x0A, 0x04, 0x04, 0x04}},
    {'Z', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F}}, {'-', {0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00}},
    {'_', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x1F}}, {'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C}},
    {':', {0x00, 0x0C, 0x0C, 0x00, 0x0C, 0x0C, 0x00}}, {'(', {0x02, 0x04, 0x08, 0x08, 0x08, 0x04, 0x02}},
    {')', {0x08, 0x04, 0x02, 0x02, 0x02, 0x04, 0x08}}, {'/', {0x00, 0x01, 0x02, 0x04, 0x08, 0x10, 0x00}},
    {'%', {0x18, 0x19, 0x02, 0x04, 0x08, 0x13, 0x03}}, {'+', {0x00, 0x04, 0x04, 0x1F, 0x04, 0x04, 0x00}},
    {'=', {0x00, 0x00, 0x1F, 0x00, 0x1F, 0x00, 0x00}}, {'?', {0x0E, 0x11, 0x01, 0x02, 0x04, 0x00, 0x04}},
};

const Glyph& glyph_for(char c) {
    const char upper = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    for (const auto& e : kFont) {
        if (e.c == upper) return e.rows;
    }
    for (const auto& e : kFont) {
        if (e.c == '?') return e.rows;
    }
    return kFont[0].rows;
}

constexpr int kGlyphWidth = 5;
constexpr int kGlyphHeight = 7;
constexpr int kAdvance = 6;

}  // namespace

int draw_text(std::vector<double>& canvas, Shape shape, int x, int y, std::string_view text, double value) {
    int pen = x;
    for (char c : text) {
        const auto& g = glyph_for(c);
        for (int r = 0; r < kGlyphHeight; ++r) {
            for (int col = 0; col < kGlyphWidth; ++col) {
                if (!((g[static_cast<std::size_t>(r)] >> (kGlyphWidth - 1 - col)) & 1)) continue;
                const int px = pen + col, py = y + r;
                if (px < 0 || py < 0 || px >= shape.width || py >= shape.height) continue;
                const std::size_t base = (static_cast<std::size_t>(py) * shape.width + px) * shape.channels;
                for (int ch = 0; ch < shape.channels; ++ch) canvas[base + ch] = value;
            }
        }
        pen += kAdvance;
    }
    return pen - x;
}

ImageTensor comparison_grid(const std::vector<GridRow>& rows, const GridLayout& layout) {
    if (layout.gutter < 0 || layout.label_height < 0) throw ParameterError("grid gutter and label height must be >= 0");
    int cell_h = -1, cell_w = -1;
    std::size_t columns = 0;
    for (const auto& row : rows) {
        columns = std::max(columns, row.images.size());
        for (const auto& img : row.images) {
            if (cell_h < 0) {
                cell_h = img.shape().height;
                cell_w = img.shape().width;
            } else if (img.shape().height != cell_h || img.shape().width != cell_w) {
                throw ParameterError("grid images differ in size: " + to_string(img.shape()) + " vs " +
                                     std::to_string(cell_h) + "x" + std::to_string(cell_w));
            }
            if (img.shape().channels != 1 && img.shape().channels != 3) {
                throw ParameterError("grid images must have 1 or 3 channels");
            }
        }
    }
    if (rows.empty() || columns == 0) throw ParameterError("grid has no images");

    const int g = layout.gutter;
    const auto cols = static_cast<int>(columns);
    const auto nrows = static_cast<int>(rows.size());
    const Shape shape{nrows * (layout.label_height + cell_h) + (nrows + 1) * g, cols * cell_w + (cols + 1) * g, 3};
    std::vector<double> canvas(shape.size(), 1.0);

    for (int r = 0; r < nrows; ++r) {
        const auto& row = rows[static_cast<std::size_t>(r)];
        const int strip_y = g + r * (layout.label_height + cell_h + g);
        if (layout.label_height >= kGlyphHeight) {
            const int text_y = strip_y + (layout.label_height - kGlyphHeight) / 2;
            draw_text(canvas, shape, g, text_y, row.label, 0.0);
        }
        const int image_y = strip_y + layout.label_height;
        for (int c = 0; c < static_cast<int>(row.images.size()); ++c) {
            const auto& img = row.images[static_cast<std::size_t>(c)];
            const auto values = img.values();
            const int channels = img.shape().channels;
            const int image_x = g + c * (cell_w + g);
            for (int y = 0; y < cell_h; ++y) {
                for (int x = 0; x < cell_w; ++x) {
                    const std::size_t src = (static_cast<std::size_t>(y) * cell_w + x) * channels;
                    const std::size_t dst = (static_cast<std::size_t>(image_y + y) * shape.width + image_x + x) * 3;
                    for (int ch = 0; ch < 3; ++ch) canvas[dst + ch] = values[src + (channels == 3 ? ch : 0)];
                }
            }
        }
    }
    return ImageTensor(shape, std::move(canvas));
}

}  // namespace dualcloak
