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

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "dualcloak/image.hpp"

namespace dualcloak {

/// Per-pixel {0,1} mask over an image's spatial grid. A single mask is
/// broadcast across channels when it gates a perturbation.
struct BinaryMask {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> bits;

    static BinaryMask filled(int height, int width, bool value);

    std::size_t pixels() const { return bits.size(); }
    std::size_t popcount() const;
    bool test(int row, int col) const { return bits[static_cast<std::size_t>(row) * width + col] != 0; }
    /// True when every set pixel of *this is also set in `other`.
    bool subset_of(const BinaryMask& other) const;

    friend bool operator==(const BinaryMask&, const BinaryMask&) = default;
};

/// Serializes as 8-bit grayscale PNG with values {0, 255}.
void save_mask(const BinaryMask& mask, const std::filesystem::path& path);
/// Any non-zero byte reads back as 1.
BinaryMask load_mask(const std::filesystem::path& path);

struct LabelInfo {
    std::uint8_t id = 0;
    std::string name;
};

/// The label vocabulary of a face parser, with one label designated as hair.
struct LabelSet {
    std::vector<LabelInfo> labels;
    std::uint8_t hair_label = 0;

    bool contains(std::uint8_t id) const;
};

/// The 19-class CelebAMask-HQ parsing vocabulary used by BiSeNet-style
/// parsers: 0 background, 1 skin, ..., 17 hair, 18 hat.
const LabelSet& celebamask_label_set();

/// RGB palette (one triplet per label id) used when writing annotation PNGs.
std::vector<std::uint8_t> celebamask_palette();

struct LabelMap {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> labels;
};

/// Face parsing backend: assigns a component label to every pixel.
///
/// `source_id` names the image being parsed (the file stem for images read
/// from disk). Pixel-based parsers may ignore it; annotation-backed parsers use
/// it to look up ground truth.
class FaceParser {
public:
    virtual ~FaceParser() = default;

    virtual std::string_view name() const = 0;
    virtual const LabelSet& label_set() const = 0;
    virtual LabelMap parse(const ImageTensor& image, std::string_view source_id) const = 0;
    /// Parsers that are not safe to call from several threads return false and
    /// the pipeline serializes around them.
    virtual bool concurrent_safe() const { return true; }
};

/// Serves ground-truth annotations (8-bit indexed or grayscale PNGs whose
/// values are label ids) keyed by source id. Annotations come from
/// `<directory>/<source_id>.png` or from entries registered in memory.
class FixtureParser final : public FaceParser {
public:
    explicit FixtureParser(LabelSet labels = celebamask_label_set());
    FixtureParser(std::filesystem::path directory, LabelSet labels = celebamask_label_set());

    void add(std::string source_id, LabelMap annotation);

    std::string_view name() const override { return "fixture"; }
    const LabelSet& label_set() const override { return labels_; }
    LabelMap parse(const ImageTensor& image, std::string_view source_id) const override;

private:
    LabelSet labels_;
    std::filesystem::path directory_;
    mutable std::mutex mutex_;
    mutable std::map<std::string, LabelMap, std::less<>> cache_;
};

LabelMap load_label_map(const std::filesystem::path& path);
void save_label_map(const LabelMap& labels, const std::filesystem::path& path);

/// Runs the parser and checks its contract (shape, label vocabulary). Any
/// failure surfaces as ParseError carrying the cause.
LabelMap parse_face(const FaceParser& parser, const ImageTensor& image, std::string_view source_id);

/// One non-negative value per pixel.
struct HighFrequencyMap {
    int height = 0;
    int width = 0;
    std::vector<double> values;
};

/// |x - blur(x)| per channel, reduced by the per-pixel maximum over channels.
HighFrequencyMap high_freq(const ImageTensor& image, const BlurParams& params);

/// 1 where high_freq(x) > gamma (strict), else 0.
BinaryMask texture_mask(const ImageTensor& image, double gamma, const BlurParams& params);

/// 1 where the label equals `hair_label`. Throws ParameterError if the label
/// is not part of `vocabulary`.
BinaryMask hair_mask(const LabelMap& labels, std::uint8_t hair_label,
                     const LabelSet& vocabulary = celebamask_label_set());

/// Pixelwise AND; shapes must match.
BinaryMask combine_masks(const BinaryMask& texture, const BinaryMask& hair);

}  // namespace dualcloak
