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

#include "dualcloak/texture.hpp"

#include <algorithm>
#include <cmath>

#include "dualcloak/errors.hpp"

namespace dualcloak {

BinaryMask BinaryMask::filled(int height, int width, bool value) {
    if (height < 1 || width < 1) throw ParameterError("mask must be at least 1x1");
    return {height, width, std::vector<std::uint8_t>(static_cast<std::size_t>(height) * width, value ? 1 : 0)};
}

std::size_t BinaryMask::popcount() const {
    return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

bool BinaryMask::subset_of(const BinaryMask& other) const {
    if (height != other.height || width != other.width) return false;
    for (std::size_t i = 0; i < bits.size(); ++i) {
        if (bits[i] && !other.bits[i]) return false;
    }
    return true;
}

void save_mask(const BinaryMask& mask, const std::filesystem::path& path) {
    BytePlane plane{mask.height, mask.width, {}};
    plane.values.reserve(mask.bits.size());
    for (auto b : mask.bits) plane.values.push_back(b ? 255 : 0);
    save_gray_png(plane, path);
}

BinaryMask load_mask(const std::filesystem::path& path) {
    auto plane = load_byte_plane(path);
    BinaryMask mask{plane.height, plane.width, std::move(plane.values)};
    for (auto& b : mask.bits) b = b != 0 ? 1 : 0;
    return mask;
}

bool LabelSet::contains(std::uint8_t id) const {
    return std::any_of(labels.begin(), labels.end(), [id](const LabelInfo& l) { return l.id == id; });
}

const LabelSet& celebamask_label_set() {
    static const LabelSet set = [] {
        const char* names[] = {"background", "skin",  "l_brow", "r_brow", "l_eye", "r_eye", "eye_g",
                               "l_ear",      "r_ear", "ear_r",  "nose",   "mouth", "u_lip", "l_lip",
                               "neck",       "neck_l", "cloth", "hair",   "hat"};
        LabelSet s;
        for (std::uint8_t i = 0; i < 19; ++i) s.labels.push_back({i, names[i]});
        s.hair_label = 17;
        return s;
    }();
    return set;
}

std::vector<std::uint8_t> celebamask_palette() {
    // Colors from the usual face-parsing visualizations, indexed by label id.
    static const std::uint8_t colors[19][3] = {
        {0, 0, 0},       {204, 0, 0},   {76, 153, 0},  {204, 204, 0}, {51, 51, 255},   {204, 0, 204}, {0, 255, 255},
        {255, 204, 204}, {102, 51, 0},  {255, 0, 0},   {102, 204, 0}, {255, 255, 0},   {0, 0, 153},   {0, 0, 204},
        {255, 51, 153},  {0, 204, 204}, {0, 51, 0},    {255, 153, 51}, {0, 204, 0}};
    std::vector<std::uint8_t> out;
    for (const auto& c : colors) out.insert(out.end(), std::begin(c), std::end(c));
    return out;
}

FixtureParser::FixtureParser(LabelSet labels) : labels_(std::move(labels)) {}

FixtureParser::FixtureParser(std::filesystem::path directory, LabelSet labels)
    : labels_(std::move(labels)), directory_(std::move(directory)) {}

void FixtureParser::add(std::string source_id, LabelMap annotation) {
    std::lock_guard lock(mutex_);
    cache_.insert_or_assign(std::move(source_id), std::move(annotation));
}

LabelMap FixtureParser::parse(const ImageTensor& /*image*/, std::string_view source_id) const {
    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(source_id); it != cache_.end()) return it->second;
    if (directory_.empty()) {
        throw ParseError("no annotation registered for '" + std::string(source_id) + "'");
    }
    auto labels = load_label_map(directory_ / (std::string(source_id) + ".png"));
    cache_.emplace(std::string(source_id), labels);
    return labels;
}

LabelMap load_label_map(const std::filesystem::path& path) {
    auto plane = load_byte_plane(path);
    return {plane.height, plane.width, std::move(plane.values)};
}

void save_label_map(const LabelMap& labels, const std::filesystem::path& path) {
    save_indexed_png({labels.height, labels.width, labels.labels}, celebamask_palette(), path);
}

LabelMap parse_face(const FaceParser& parser, const ImageTensor& image, std::string_view source_id) {
    LabelMap labels;
    try {
        labels = parser.parse(image, source_id);
    } catch (const ParseError&) {
        throw;
    } catch (const std::exception& e) {
        throw ParseError(std::string(parser.name()) + " failed on '" + std::string(source_id) + "': " + e.what());
    }
    if (labels.height != image.height() || labels.width != image.width()) {
        throw ParseError(std::string(parser.name()) + " returned a " + std::to_string(labels.height) + "x" +
                         std::to_string(labels.width) + " label map for a " + std::to_string(image.height()) + "x" +
                         std::to_string(image.width()) + " image");
    }
    const auto& vocabulary = parser.label_set();
    for (auto id : labels.labels) {
        if (!vocabulary.contains(id)) {
            throw ParseError(std::string(parser.name()) + " produced label " + std::to_string(id) +
                             " outside its label set");
        }
    }
    return labels;
}

HighFrequencyMap high_freq(const ImageTensor& image, const BlurParams& params) {
    const auto blurred = blur_values(image.view(), params);
    const auto values = image.values();
    const auto& s = image.shape();
    HighFrequencyMap out{s.height, s.width, std::vector<double>(s.pixels(), 0.0)};
    for (std::size_t p = 0; p < s.pixels(); ++p) {
        double peak = 0.0;
        for (int c = 0; c < s.channels; ++c) {
            const std::size_t i = p * static_cast<std::size_t>(s.channels) + static_cast<std::size_t>(c);
            peak = std::max(peak, std::abs(values[i] - blurred[i]));
        }
        out.values[p] = std::min(peak, 1.0);
    }
    return out;
}

BinaryMask texture_mask(const ImageTensor& image, double gamma, const BlurParams& params) {
    if (!(gamma >= 0.0)) throw ParameterError("texture threshold gamma must be >= 0");
    const auto hf = high_freq(image, params);
    BinaryMask mask{hf.height, hf.width, std::vector<std::uint8_t>(hf.values.size(), 0)};
    for (std::size_t i = 0; i < hf.values.size(); ++i) mask.bits[i] = hf.values[i] > gamma ? 1 : 0;
    return mask;
}

BinaryMask hair_mask(const LabelMap& labels, std::uint8_t hair_label, const LabelSet& vocabulary) {
    if (!vocabulary.contains(hair_label)) {
        throw ParameterError("hair label " + std::to_string(hair_label) + " is not in the label set");
    }
    BinaryMask mask{labels.height, labels.width, std::vector<std::uint8_t>(labels.labels.size(), 0)};
    for (std::size_t i = 0; i < labels.labels.size(); ++i) mask.bits[i] = labels.labels[i] == hair_label ? 1 : 0;
    return mask;
}

BinaryMask combine_masks(const BinaryMask& texture, const BinaryMask& hair) {
    if (texture.height != hair.height || texture.width != hair.width) {
        throw ParameterError("cannot combine a " + std::to_string(texture.height) + "x" +
                             std::to_string(texture.width) + " mask with a " + std::to_string(hair.height) + "x" +
                             std::to_string(hair.width) + " mask");
    }
    BinaryMask out{texture.height, texture.width, std::vector<std::uint8_t>(texture.bits.size(), 0)};
    for (std::size_t i = 0; i < out.bits.size(); ++i) out.bits[i] = (texture.bits[i] && hair.bits[i]) ? 1 : 0;
    return out;
}

}  // namespace dualcloak
