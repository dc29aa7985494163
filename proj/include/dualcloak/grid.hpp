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

#include <string>
#include <string_view>
#include <vector>

#include "dualcloak/image.hpp"

namespace dualcloak {

struct GridRow {
    std::string label;
    std::vector<ImageTensor> images;
};

/// Every row is a label strip of `label_height` pixels above its images.
/// With C columns of W x H images and R rows:
///   width  = C*W + (C + 1)*gutter
///   height = R*(label_height + H) + (R + 1)*gutter
struct GridLayout {
    int gutter = 4;
    int label_height = 11;
};

/// White canvas, black 5x7 text; single-channel images are drawn as gray.
/// ParameterError when images differ in size or there is nothing to draw.
ImageTensor comparison_grid(const std::vector<GridRow>& rows, const GridLayout& layout = {});

/// Draws `text` (A-Z, 0-9 and - _ . : ( ) / % + =; lower case is folded) with
/// its top-left corner at (x, y), clipped to the canvas. Returns the advance.
int draw_text(std::vector<double>& canvas, Shape shape, int x, int y, std::string_view text, double value);

}  // namespace dualcloak
