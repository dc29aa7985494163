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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace dualcloak {

/// Spatial and channel extent of an image. Layout is always channels-last.
struct Shape {
    int height = 0;
    int width = 0;
    int channels = 0;

    std::size_t pixels() const { return static_cast<std::size_t>(height) * static_cast<std::size_t>(width); }
    std::size_t size() const { return pixels() * static_cast<std::size_t>(channels); }
    friend bool operator==(const Shape&, const Shape&) = default;
};

std::string to_string(const Shape& shape);

/// Read-only view over raw channels-last pixel data. Unlike ImageTensor the
/// values are not range-checked, so gradient code can evaluate models at
/// points outside the unit cube.
struct ImageView {
    Shape shape;
    std::span<const double> data;
};

/// Channels-last real-valued image with every value in [0, 1].
///
/// Construction validates the range; use clamp01() or ImageTensor::clamped()
/// to project arbitrary values into the valid domain.
class ImageTensor {
public:
    ImageTensor() = default;

    /// Uniformly filled image.
    ImageTensor(Shape shape, double fill);

    /// Takes ownership of `values`; throws ParameterError on bad shape or
    /// any value outside [0, 1] (NaN included).
    ImageTensor(Shape shape, std::vector<double> values);

    /// Projects `values` into [0, 1] instead of rejecting them.
    static ImageTensor clamped(Shape shape, std::vector<double> values);

    const Shape& shape() const noexcept { return shape_; }
    int height() const noexcept { return shape_.height; }
    int width() const noexcept { return shape_.width; }
    int channels() const noexcept { return shape_.channels; }
    bool empty() const noexcept { return data_.empty(); }

    double at(int row, int col, int channel) const { return data_[index(row, col, channel)]; }
    std::size_t index(int row, int col, int channel) const {
        return (static_cast<std::size_t>(row) * static_cast<std::size_t>(shape_.width) + static_cast<std::size_t>(col)) *
                   static_cast<std::size_t>(shape_.channels) +
               static_cast<std::size_t>(channel);
    }

    std::span<const double> values() const noexcept { return data_; }
    ImageView view() const noexcept { return {shape_, data_}; }

    friend bool operator==(const ImageTensor&, const ImageTensor&) = default;

private:
    Shape shape_{};
    std::vector<double> data_;
};

/// Gaussian blur parameters; kernel_size must be odd and sigma positive.
struct BlurParams {
    int kernel_size = 19;
    double sigma = 5.0;

    void validate() const;
    bool operator==(const BlurParams&) const = default;
};

/// Normalized 1D Gaussian taps, length kernel_size.
std::vector<double> gaussian_kernel_1d(const BlurParams& params);

/// Index into [0, n) with reflect-101 borders (dcb|abcd|cba), folded
/// repeatedly so any offset is valid.
int reflect_index(int i, int n);

/// Separable Gaussian blur of raw channels-last data. Linear and unclamped.
std::vector<double> blur_values(const ImageView& image, const BlurParams& params);

/// Per-channel Gaussian blur with reflect padding; output clamped to [0, 1].
ImageTensor gaussian_blur(const ImageTensor& image, const BlurParams& params);

ImageTensor clamp01(const ImageTensor& image);
std::vector<double> clamp01(std::span<const double> values);

ImageTensor flip_horizontal(const ImageTensor& image);

/// Bilinear resize (half-pixel centers, edge clamped) and its adjoint. The
/// adjoint is used to back-propagate gradients through embedders that
/// resample their input.
std::vector<double> resize_bilinear(const ImageView& image, int out_height, int out_width);
std::vector<double> resize_bilinear_adjoint(std::span<const double> upstream, Shape out_shape, Shape in_shape);

// ---- I/O ------------------------------------------------------------------

/// Decodes PNG or JPEG into [0, 1] values (byte / 255, or word / 65535 for
/// 16-bit PNG). Palette images expand to RGB, alpha is dropped.
ImageTensor load_image(const std::filesystem::path& path);
ImageTensor decode_image(std::span<const std::uint8_t> bytes);

/// Writes an 8-bit non-interlaced PNG; values quantize to round(v * 255).
void save_image(const ImageTensor& image, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_png(const ImageTensor& image);

/// Raw 8-bit single-channel plane (grayscale or palette indices, never
/// expanded). Used for label maps and masks.
struct BytePlane {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> values;
};

BytePlane load_byte_plane(const std::filesystem::path& path);

/// Writes an 8-bit grayscale PNG.
void save_gray_png(const BytePlane& plane, const std::filesystem::path& path);

/// Writes an 8-bit indexed PNG using `palette` (RGB triplets, up to 256).
void save_indexed_png(const BytePlane& plane, std::span<const std::uint8_t> palette_rgb,
                      const std::filesystem::path& path);

}  // namespace dualcloak
