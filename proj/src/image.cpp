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

#include "dualcloak/image.hpp"

#include <algorithm>
#include <cmath>

#include "dualcloak/errors.hpp"

namespace dualcloak {

namespace {

void validate_shape(const Shape& shape) {
    if (shape.height < 1 || shape.width < 1) {
        throw ParameterError("image must be at least 1x1, got " + to_string(shape));
    }
    if (shape.channels != 1 && shape.channels != 3) {
        throw ParameterError("image must have 1 or 3 channels, got " + to_string(shape));
    }
}

}  // namespace

std::string to_string(const Shape& shape) {
    return std::to_string(shape.height) + "x" + std::to_string(shape.width) + "x" + std::to_string(shape.channels);
}

ImageTensor::ImageTensor(Shape shape, double fill) : shape_(shape) {
    validate_shape(shape);
    if (!(fill >= 0.0 && fill <= 1.0)) {
        throw ParameterError("fill value outside [0,1]");
    }
    data_.assign(shape.size(), fill);
}

ImageTensor::ImageTensor(Shape shape, std::vector<double> values) : shape_(shape), data_(std::move(values)) {
    validate_shape(shape);
    if (data_.size() != shape.size()) {
        throw ParameterError("pixel buffer has " + std::to_string(data_.size()) + " values, shape " + to_string(shape) +
                             " needs " + std::to_string(shape.size()));
    }
    for (double v : data_) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw ParameterError("pixel value outside [0,1]: " + std::to_string(v));
        }
    }
}

ImageTensor ImageTensor::clamped(Shape shape, std::vector<double> values) {
    for (double& v : values) {
        v = std::isnan(v) ? 0.0 : std::clamp(v, 0.0, 1.0);
    }
    return ImageTensor(shape, std::move(values));
}

void BlurParams::validate() const {
    if (kernel_size < 1 || kernel_size % 2 == 0) {
        throw ParameterError("blur kernel_size must be odd and >= 1, got " + std::to_string(kernel_size));
    }
    if (!(sigma > 0.0)) {
        throw ParameterError("blur sigma must be > 0");
    }
}

std::vector<double> gaussian_kernel_1d(const BlurParams& params) {
    params.validate();
    const int radius = params.kernel_size / 2;
    std::vector<double> taps(static_cast<std::size_t>(params.kernel_size));
    double total = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double v = std::exp(-(static_cast<double>(i) * i) / (2.0 * params.sigma * params.sigma));
        taps[static_cast<std::size_t>(i + radius)] = v;
        total += v;
    }
    for (double& t : taps) t /= total;
    return taps;
}

int reflect_index(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * (n - 1);
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - i;
}

std::vector<double> blur_values(const ImageView& image, const BlurParams& params) {
    const auto taps = gaussian_kernel_1d(params);
    const int radius = params.kernel_size / 2;
    const auto [h, w, c] = image.shape;
    const auto at = [&](int r, int col, int ch) {
        return (static_cast<std::size_t>(r) * w + col) * c + ch;
    };

    std::vector<double> horizontal(image.shape.size());
    for (int r = 0; r < h; ++r) {
        for (int col = 0; col < w; ++col) {
            for (int ch = 0; ch < c; ++ch) {
                double acc = 0.0;
                for (int k = -radius; k <= radius; ++k) {
                    acc += taps[static_cast<std::size_t>(k + radius)] * image.data[at(r, reflect_index(col + k, w), ch)];
                }
                horizontal[at(r, col, ch)] = acc;
            }
        }
    }

    std::vector<double> out(image.shape.size());
    for (int r = 0; r < h; ++r) {
        for (int col = 0; col < w; ++col) {
            for (int ch = 0; ch < c; ++ch) {
                double acc = 0.0;
                for (int k = -radius; k <= radius; ++k) {
                    acc += taps[static_cast<std::size_t>(k + radius)] * horizontal[at(reflect_index(r + k, h), col, ch)];
                }
                out[at(r, col, ch)] = acc;
            }
        }
    }
    return out;
}

ImageTensor gaussian_blur(const ImageTensor& image, const BlurParams& params) {
    return ImageTensor::clamped(image.shape(), blur_values(image.view(), params));
}

std::vector<double> clamp01(std::span<const double> values) {
    std::vector<double> out(values.begin(), values.end());
    for (double& v : out) v = std::clamp(v, 0.0, 1.0);
    return out;
}

ImageTensor clamp01(const ImageTensor& image) { return image; }

ImageTensor flip_horizontal(const ImageTensor& image) {
    const auto& s = image.shape();
    std::vector<double> out(s.size());
    for (int r = 0; r < s.height; ++r) {
        for (int col = 0; col < s.width; ++col) {
            for (int ch = 0; ch < s.channels; ++ch) {
                out[image.index(r, col, ch)] = image.at(r, s.width - 1 - col, ch);
            }
        }
    }
    return ImageTensor(s, std::move(out));
}

namespace {

struct Tap {
    int lo;
    int hi;
    double frac;
};

// Source coordinate for output index i under half-pixel-center mapping.
Tap bilinear_tap(int i, int in_n, int out_n) {
    const double scale = static_cast<double>(in_n) / out_n;
    double src = (i + 0.5) * scale - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in_n - 1));
    const int lo = static_cast<int>(std::floor(src));
    const int hi = std::min(lo + 1, in_n - 1);
    return {lo, hi, src - lo};
}

}  // namespace

std::vector<double> resize_bilinear(const ImageView& image, int out_height, int out_width) {
    const auto& in = image.shape;
    if (out_height < 1 || out_width < 1) throw ParameterError("resize target must be at least 1x1");
    std::vector<double> out(static_cast<std::size_t>(out_height) * out_width * in.channels);
    for (int r = 0; r < out_height; ++r) {
        const Tap ty = bilinear_tap(r, in.height, out_height);
        for (int col = 0; col < out_width; ++col) {
            const Tap tx = bilinear_tap(col, in.width, out_width);
            for (int ch = 0; ch < in.channels; ++ch) {
                const auto px = [&](int y, int x) {
                    return image.data[(static_cast<std::size_t>(y) * in.width + x) * in.channels + ch];
                };
                const double top = px(ty.lo, tx.lo) * (1 - tx.frac) + px(ty.lo, tx.hi) * tx.frac;
                const double bottom = px(ty.hi, tx.lo) * (1 - tx.frac) + px(ty.hi, tx.hi) * tx.frac;
                out[(static_cast<std::size_t>(r) * out_width + col) * in.channels + ch] =
                    top * (1 - ty.frac) + bottom * ty.frac;
            }
        }
    }
    return out;
}

std::vector<double> resize_bilinear_adjoint(std::span<const double> upstream, Shape out_shape, Shape in_shape) {
    if (upstream.size() != out_shape.size() || out_shape.channels != in_shape.channels) {
        throw ParameterError("resize adjoint: upstream does not match output shape");
    }
    std::vector<double> grad(in_shape.size(), 0.0);
    const int c = in_shape.channels;
    for (int r = 0; r < out_shape.height; ++r) {
        const Tap ty = bilinear_tap(r, in_shape.height, out_shape.height);
        for (int col = 0; col < out_shape.width; ++col) {
            const Tap tx = bilinear_tap(col, in_shape.width, out_shape.width);
            for (int ch = 0; ch < c; ++ch) {
                const double g = upstream[(static_cast<std::size_t>(r) * out_shape.width + col) * c + ch];
                const auto add = [&](int y, int x, double wgt) {
                    grad[(static_cast<std::size_t>(y) * in_shape.width + x) * c + ch] += g * wgt;
                };
                add(ty.lo, tx.lo, (1 - ty.frac) * (1 - tx.frac));
                add(ty.lo, tx.hi, (1 - ty.frac) * tx.frac);
                add(ty.hi, tx.lo, ty.frac * (1 - tx.frac));
                add(ty.hi, tx.hi, ty.frac * tx.frac);
            }
        }
    }
    return grad;
}

}  // namespace dualcloak
