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

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "dualcloak/convnet.hpp"
#include "dualcloak/embedding.hpp"
#include "dualcloak/manifold.hpp"
#include "dualcloak/texture.hpp"

namespace dualcloak {

/// $DUALCLOAK_CACHE, else $HOME/.cache/dualcloak, else ./.dualcloak-cache.
std::filesystem::path default_cache_dir();

using EmbedderFactory = std::function<EmbedderPtr(const std::filesystem::path& cache_dir)>;
using GeneratorFactory = std::function<GeneratorPtr(const std::filesystem::path& cache_dir)>;

/// Adds or replaces a named embedder / generator for every ModelZoo.
void register_embedder(std::string name, EmbedderFactory factory);
void register_generator(std::string name, GeneratorFactory factory);
std::vector<std::string> registered_embedders();
std::vector<std::string> registered_generators();

/// Built-in toy convnet recipes: "toyconv-1" .. "toyconv-4".
ConvNetArch toyconv_arch(int index);
ConvNetTraining toyconv_training(int index);
/// Trains the named recipe from scratch (no cache).
ToyConvNet train_toyconv(int index);
ToyDecoderGenerator fit_toy_decoder();

/// Built-in attribute edits derived from the synthetic renderer: "smile" and
/// "age" (difference of mean latent codes between the attribute extremes)
/// and "none" (zero strength).
AttributeDirection derive_attribute(const GenerativeModel& generator, std::string_view name);

/// Resolves names to shared model instances, training and caching the
/// built-in toy models on first use. Thread-safe.
class ModelZoo {
public:
    explicit ModelZoo(std::filesystem::path cache_dir = default_cache_dir());

    EmbedderPtr embedder(std::string_view name);
    GeneratorPtr generator(std::string_view name);
    EmbedderEnsemble ensemble(const std::vector<std::string>& names);
    /// Built-in attribute by name, cached per generator.
    AttributeDirection attribute(std::string_view generator_name, std::string_view attribute_name);

    const std::filesystem::path& cache_dir() const { return cache_dir_; }

private:
    std::filesystem::path cache_dir_;
    std::mutex mutex_;
    std::map<std::string, EmbedderPtr, std::less<>> embedders_;
    std::map<std::string, GeneratorPtr, std::less<>> generators_;
};

/// "fixture" is the only built-in parser; it reads NAME.png label maps from
/// `annotation_dir`.
std::shared_ptr<const FaceParser> make_parser(std::string_view name, const std::filesystem::path& annotation_dir);

}  // namespace dualcloak
