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

#include <png.h>
#include <jpeglib.h>

#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>

#include "dualcloak/errors.hpp"
#include "dualcloak/image.hpp"

namespace dualcloak {

namespace {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec)) {
        throw NotFoundError("no such file: " + path.string());
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::vector<std::uint8_t>& bytes, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw IoError("write failed: " + path.string());
}

bool is_png(std::span<const std::uint8_t> bytes) {
    return bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0;
}

bool is_jpeg(std::span<const std::uint8_t> bytes) {
    return bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF;
}

// ---- PNG decode -----------------------------------------------------------

struct MemoryReader {
    std::span<const std::uint8_t> bytes;
    std::size_t offset = 0;
};

void png_read_from_memory(png_structp png, png_bytep out, png_size_t length) {
    auto* reader = static_cast<MemoryReader*>(png_get_io_ptr(png));
    if (reader->offset + length > reader->bytes.size()) {
        png_error(png, "truncated PNG stream");
    }
    std::memcpy(out, reader->bytes.data() + reader->offset, length);
    reader->offset += length;
}

enum class PngTarget { kImage, kBytePlane };

struct DecodedPng {
    int height = 0;
    int width = 0;
    int channels = 0;
    int bit_depth = 8;
    std::vector<std::uint8_t> raw;  // row-major, tightly packed
};

// Decodes into `result`. Returns an error message, empty on success; libpng
// reports failures by longjmp back to the setjmp below.
std::string decode_png_into(std::span<const std::uint8_t> bytes, PngTarget target, DecodedPng& result) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (png == nullptr) return "png_create_read_struct failed";
    png_infop info = png_create_info_struct(png);
    if (info == nullptr) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        return "png_create_info_struct failed";
    }
    MemoryReader reader{bytes, 0};
    std::vector<png_bytep> rows;
    const char* failure = nullptr;

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        return "corrupt PNG data";
    }
    png_set_read_fn(png, &reader, png_read_from_memory);
    png_read_info(png, info);

    const png_byte color_type = png_get_color_type(png, info);
    const png_byte depth = png_get_bit_depth(png, info);
    if (png_get_interlace_type(png, info) != PNG_INTERLACE_NONE) {
        png_set_interlace_handling(png);
    }

    if (target == PngTarget::kBytePlane) {
        if (color_type == PNG_COLOR_TYPE_PALETTE) {
            png_set_packing(png);
        } else if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA) {
            if (depth < 8) png_set_expand_gray_1_2_4_to_8(png);
            if (depth == 16) png_set_strip_16(png);
            if (color_type == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_strip_alpha(png);
        } else {
            failure = "label/mask PNG must be grayscale or indexed";
        }
    } else {
        if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
        if (color_type == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
        if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
        // tRNS chunks are ignored: transparency is not part of the image model.
    }
    if (failure != nullptr) {
        png_destroy_read_struct(&png, &info, nullptr);
        return failure;
    }

    png_read_update_info(png, info);
    result.height = static_cast<int>(png_get_image_height(png, info));
    result.width = static_cast<int>(png_get_image_width(png, info));
    result.channels = png_get_channels(png, info);
    result.bit_depth = png_get_bit_depth(png, info);
    const std::size_t stride = png_get_rowbytes(png, info);
    result.raw.assign(stride * static_cast<std::size_t>(result.height), 0);
    rows.resize(static_cast<std::size_t>(result.height));
    for (int r = 0; r < result.height; ++r) {
        rows[static_cast<std::size_t>(r)] = result.raw.data() + stride * static_cast<std::size_t>(r);
    }
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return {};
}

// ---- JPEG decode ----------------------------------------------------------

struct JpegErrorManager {
    jpeg_error_mgr base;
    std::jmp_buf jump;
};

void jpeg_error_exit(j_common_ptr cinfo) {
    auto* manager = reinterpret_cast<JpegErrorManager*>(cinfo->err);
    std::longjmp(manager->jump, 1);
}

std::string decode_jpeg_into(std::span<const std::uint8_t> bytes, DecodedPng& result) {
    jpeg_decompress_struct cinfo{};
    JpegErrorManager error{};
    cinfo.err = jpeg_std_error(&error.base);
    error.base.error_exit = jpeg_error_exit;
    if (setjmp(error.jump)) {
        jpeg_destroy_decompress(&cinfo);
        return "corrupt JPEG data";
    }
    jpeg_create_decompress(&cinfo);
    jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
    jpeg_read_header(&cinfo, TRUE);
    if (cinfo.num_components != 1) cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);
    result.height = static_cast<int>(cinfo.output_height);
    result.width = static_cast<int>(cinfo.output_width);
    result.channels = cinfo.output_components;
    result.bit_depth = 8;
    const std::size_t stride = static_cast<std::size_t>(result.width) * static_cast<std::size_t>(result.channels);
    result.raw.assign(stride * static_cast<std::size_t>(result.height), 0);
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = result.raw.data() + stride * cinfo.output_scanline;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return {};
}

ImageTensor to_tensor(const DecodedPng& decoded) {
    const Shape shape{decoded.height, decoded.width, decoded.channels};
    if (decoded.channels != 1 && decoded.channels != 3) {
        throw FormatError("unsupported channel count " + std::to_string(decoded.channels));
    }
    std::vector<double> values(shape.size());
    if (decoded.bit_depth == 16) {
        for (std::size_t i = 0; i < values.size(); ++i) {
            const unsigned word = (static_cast<unsigned>(decoded.raw[2 * i]) << 8) | decoded.raw[2 * i + 1];
            values[i] = word / 65535.0;
        }
    } else {
        for (std::size_t i = 0; i < values.size(); ++i) values[i] = decoded.raw[i] / 255.0;
    }
    return ImageTensor(shape, std::move(values));
}

// ---- PNG encode -----------------------------------------------------------

void png_write_to_vector(png_structp png, png_bytep data, png_size_t length) {
    auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + length);
}

void png_flush_noop(png_structp) {}

std::string encode_png_into(int height, int width, int color_type, const std::uint8_t* pixels, std::size_t stride,
                            std::span<const std::uint8_t> palette_rgb, std::vector<std::uint8_t>& out) {
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (png == nullptr) return "png_create_write_struct failed";
    png_infop info = png_create_info_struct(png);
    if (info == nullptr) {
        png_destroy_write_struct(&png, nullptr);
        return "png_create_info_struct failed";
    }
    std::vector<png_color> palette;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        return "PNG encoding failed";
    }
    png_set_write_fn(png, &out, png_write_to_vector, png_flush_noop);
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8, color_type,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    if (color_type == PNG_COLOR_TYPE_PALETTE) {
        palette.resize(palette_rgb.size() / 3);
        for (std::size_t i = 0; i < palette.size(); ++i) {
            palette[i] = {palette_rgb[3 * i], palette_rgb[3 * i + 1], palette_rgb[3 * i + 2]};
        }
        png_set_PLTE(png, info, palette.data(), static_cast<int>(palette.size()));
    }
    png_write_info(png, info);
    rows.resize(static_cast<std::size_t>(height));
    for (int r = 0; r < height; ++r) {
        rows[static_cast<std::size_t>(r)] = const_cast<png_bytep>(pixels + stride * static_cast<std::size_t>(r));
    }
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return {};
}

std::uint8_t quantize(double v) {
    const double clamped = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
    return static_cast<std::uint8_t>(std::lround(clamped * 255.0));
}

}  // namespace

ImageTensor decode_image(std::span<const std::uint8_t> bytes) {
    DecodedPng decoded;
    std::string error;
    if (is_png(bytes)) {
        error = decode_png_into(bytes, PngTarget::kImage, decoded);
    } else if (is_jpeg(bytes)) {
        error = decode_jpeg_into(bytes, decoded);
    } else {
        throw FormatError("not a PNG or JPEG stream");
    }
    if (!error.empty()) throw FormatError(error);
    return to_tensor(decoded);
}

ImageTensor load_image(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    try {
        return decode_image(bytes);
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

std::vector<std::uint8_t> encode_png(const ImageTensor& image) {
    const auto& s = image.shape();
    std::vector<std::uint8_t> pixels(s.size());
    const auto values = image.values();
    for (std::size_t i = 0; i < pixels.size(); ++i) pixels[i] = quantize(values[i]);
    std::vector<std::uint8_t> out;
    const int color_type = s.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY;
    const auto error = encode_png_into(s.height, s.width, color_type, pixels.data(),
                                       static_cast<std::size_t>(s.width) * s.channels, {}, out);
    if (!error.empty()) throw IoError(error);
    return out;
}

void save_image(const ImageTensor& image, const std::filesystem::path& path) {
    write_file(encode_png(image), path);
}

BytePlane load_byte_plane(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    if (!is_png(bytes)) throw FormatError(path.string() + ": label and mask files must be PNG");
    DecodedPng decoded;
    const auto error = decode_png_into(bytes, PngTarget::kBytePlane, decoded);
    if (!error.empty()) throw FormatError(path.string() + ": " + error);
    return {decoded.height, decoded.width, std::move(decoded.raw)};
}

void save_gray_png(const BytePlane& plane, const std::filesystem::path& path) {
    if (plane.values.size() != static_cast<std::size_t>(plane.height) * plane.width) {
        throw ParameterError("byte plane size does not match its dimensions");
    }
    std::vector<std::uint8_t> out;
    const auto error = encode_png_into(plane.height, plane.width, PNG_COLOR_TYPE_GRAY, plane.values.data(),
                                       static_cast<std::size_t>(plane.width), {}, out);
    if (!error.empty()) throw IoError(error);
    write_file(out, path);
}

void save_indexed_png(const BytePlane& plane, std::span<const std::uint8_t> palette_rgb,
                      const std::filesystem::path& path) {
    if (plane.values.size() != static_cast<std::size_t>(plane.height) * plane.width) {
        throw ParameterError("byte plane size does not match its dimensions");
    }
    if (palette_rgb.empty() || palette_rgb.size() % 3 != 0 || palette_rgb.size() > 3 * 256) {
        throw ParameterError("palette must hold 1..256 RGB triplets");
    }
    const std::size_t entries = palette_rgb.size() / 3;
    for (auto v : plane.values) {
        if (v >= entries) throw ParameterError("index " + std::to_string(v) + " outside the palette");
    }
    std::vector<std::uint8_t> out;
    const auto error = encode_png_into(plane.height, plane.width, PNG_COLOR_TYPE_PALETTE, plane.values.data(),
                                       static_cast<std::size_t>(plane.width), palette_rgb, out);
    if (!error.empty()) throw IoError(error);
    write_file(out, path);
}

}  // namespace dualcloak
