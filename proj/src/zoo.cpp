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

#include "dualcloak/zoo.hpp"

#include <cstdlib>

#include "dualcloak/errors.hpp"
#include "dualcloak/synthetic.hpp"

namespace dualcloak {

namespace {

constexpr int kTrainIdentities = 40;
constexpr int kTrainPerIdentity = 16;
constexpr std::size_t kDecoderLatentDim = 32;
constexpr int kToyImageSize = 32;

struct Registry {
    std::mutex mutex;
    std::map<std::string, EmbedderFactory, std::less<>> embedders;
    std::map<std::string, GeneratorFactory, std::less<>> generators;
};

template <typename Model>
std::shared_ptr<Model> load_or_build(const std::filesystem::path& file, const std::function<Model()>& build) {
    if (std::filesystem::exists(file)) {
        try {
            return std::make_shared<Model>(Model::load(file));
        } catch (const Error&) {
            // stale or truncated cache entry: rebuild below
        }
    }
    auto model = std::make_shared<Model>(build());
    std::filesystem::create_directories(file.parent_path());
    model->save(file);
    return model;
}

Registry& registry() {
    static Registry* instance = [] {
        auto* r = new Registry;
        r->embedders["toylinear"] = [](const std::filesystem::path&) -> EmbedderPtr {
            return std::make_shared<ToyLinearEmbedder>("toylinear", Shape{kToyImageSize, kToyImageSize, 3}, 32,
                                                       0x6c696e31ULL);
        };
        for (int i = 1; i <= 4; ++i) {
            const std::string name = "toyconv-" + std::to_string(i);
            r->embedders[name] = [i, name](const std::filesystem::path& cache) -> EmbedderPtr {
                return load_or_build<ToyConvNet>(cache / (name + ".v1.json"), [i] { return train_toyconv(i); });
            };
        }
        r->generators["toy-identity"] = [](const std::filesystem::path&) -> GeneratorPtr {
            return std::make_shared<ToyIdentityGenerator>(Shape{kToyImageSize, kToyImageSize, 3});
        };
        r->generators["toy-decoder"] = [](const std::filesystem::path& cache) -> GeneratorPtr {
            return load_or_build<ToyDecoderGenerator>(cache / "toy-decoder.v1.json", [] { return fit_toy_decoder(); });
        };
        return r;
    }();
    return *instance;
}

std::vector<LabeledImage> training_faces(std::uint64_t seed) {
    return make_labeled_set(make_identities(kTrainIdentities, kTrainIdentitySeed), kTrainPerIdentity, seed,
                            kToyImageSize);
}

}  // namespace

std::filesystem::path default_cache_dir() {
    if (const char* dir = std::getenv("DUALCLOAK_CACHE"); dir != nullptr && *dir != '\0') return dir;
    if (const char* home = std::getenv("HOME"); home != nullptr && *home != '\0') {
        return std::filesystem::path(home) / ".cache" / "dualcloak";
    }
    return ".dualcloak-cache";
}

void register_embedder(std::string name, EmbedderFactory factory) {
    auto& r = registry();
    std::lock_guard lock(r.mutex);
    r.embedders[std::move(name)] = std::move(factory);
}

void register_generator(std::string name, GeneratorFactory factory) {
    auto& r = registry();
    std::lock_guard lock(r.mutex);
    r.generators[std::move(name)] = std::move(factory);
}

std::vector<std::string> registered_embedders() {
    auto& r = registry();
    std::lock_guard lock(r.mutex);
    std::vector<std::string> names;
    for (const auto& [name, _] : r.embedders) names.push_back(name);
    return names;
}

std::vector<std::string> registered_generators() {
    auto& r = registry();
    std::lock_guard lock(r.mutex);
    std::vector<std::string> names;
    for (const auto& [name, _] : r.generators) names.push_back(name);
    return names;
}

ConvNetArch toyconv_arch(int index) {
    ConvNetArch arch;
    switch (index) {
        case 1: arch.channels = {8, 16, 16}; break;
        case 2: arch.channels = {12, 16, 24}; break;
        case 3: arch.channels = {8, 24, 16}; break;
        case 4: arch.channels = {16, 16, 16}; break;
        default: throw ParameterError("toyconv index must be 1..4");
    }
    arch.embed_dim = 64;
    return arch;
}

ConvNetTraining toyconv_training(int index) {
    toyconv_arch(index);  // range check
    ConvNetTraining t;
    t.seed = 1000 + static_cast<std::uint64_t>(index);
    t.logit_scale = 6.0;
    t.input_noise = 0.08;
    return t;
}

ToyConvNet train_toyconv(int index) {
    const auto training = toyconv_training(index);
    ToyConvNet net("toyconv-" + std::to_string(index), toyconv_arch(index), 0x7c0de000ULL + index);
    net.train(training_faces(0x5eed0000ULL + static_cast<std::uint64_t>(index)), kTrainIdentities, training);
    return net;
}

ToyDecoderGenerator fit_toy_decoder() {
    const auto data = make_labeled_set(make_identities(kTrainIdentities, kTrainIdentitySeed), 8, 0xdec0deULL,
                                       kToyImageSize);
    std::vector<ImageTensor> images;
    images.reserve(data.size());
    for (const auto& d : data) images.push_back(d.image);
    return ToyDecoderGenerator::fit(images, kDecoderLatentDim);
}

AttributeDirection derive_attribute(const GenerativeModel& generator, std::string_view name) {
    if (name == "none") return AttributeDirection::none(generator.latent_dim());
    if (name != "smile" && name != "age") {
        throw NotFoundError("no built-in attribute '" + std::string(name) + "' (expected smile, age or none)");
    }
    const Shape shape = generator.output_shape();
    if (shape.channels != 3 || shape.height != shape.width) {
        throw ParameterError("built-in attributes need a square RGB generator");
    }
    const auto identities = make_identities(kTrainIdentities, kTrainIdentitySeed);
    Rng rng(derive_seed(0xa77bULL, name));
    std::vector<double> diff(generator.latent_dim(), 0.0);
    for (const auto& id : identities) {
        auto low = random_variation(rng);
        low.noise_sd = 0.0;
        auto high = low;
        if (name == "smile") {
            low.smile = 0.0;
            high.smile = 1.0;
        } else {
            low.age = 0.0;
            high.age = 1.0;
        }
        const auto z_low = encode(generator, render_face(id, low, shape.height).image);
        const auto z_high = encode(generator, render_face(id, high, shape.height).image);
        for (std::size_t i = 0; i < diff.size(); ++i) diff[i] += z_high.values[i] - z_low.values[i];
    }
    double norm = 0.0;
    for (double& v : diff) {
        v /= static_cast<double>(identities.size());
        norm += v * v;
    }
    return AttributeDirection::from_raw(std::string(name), std::move(diff), std::sqrt(norm));
}

ModelZoo::ModelZoo(std::filesystem::path cache_dir) : cache_dir_(std::move(cache_dir)) {}

EmbedderPtr ModelZoo::embedder(std::string_view name) {
    std::lock_guard lock(mutex_);
    if (auto it = embedders_.find(name); it != embedders_.end()) return it->second;
    EmbedderFactory factory;
    {
        auto& r = registry();
        std::lock_guard reg_lock(r.mutex);
        auto it = r.embedders.find(name);
        if (it == r.embedders.end()) throw NotFoundError("no embedder named '" + std::string(name) + "'");
        factory = it->second;
    }
    auto model = factory(cache_dir_);
    if (!model) throw EmbedError("factory for '" + std::string(name) + "' returned nothing");
    embedders_.emplace(std::string(name), model);
    return model;
}

GeneratorPtr ModelZoo::generator(std::string_view name) {
    std::lock_guard lock(mutex_);
    if (auto it = generators_.find(name); it != generators_.end()) return it->second;
    GeneratorFactory factory;
    {
        auto& r = registry();
        std::lock_guard reg_lock(r.mutex);
        auto it = r.generators.find(name);
        if (it == r.generators.end()) throw NotFoundError("no generator named '" + std::string(name) + "'");
        factory = it->second;
    }
    auto model = factory(cache_dir_);
    if (!model) throw ManifoldError("factory for '" + std::string(name) + "' returned nothing");
    generators_.emplace(std::string(name), model);
    return model;
}

EmbedderEnsemble ModelZoo::ensemble(const std::vector<std::string>& names) {
    std::vector<EmbedderPtr> members;
    for (const auto& n : names) members.push_back(embedder(n));
    return EmbedderEnsemble(std::move(members));
}

AttributeDirection ModelZoo::attribute(std::string_view generator_name, std::string_view attribute_name) {
    const auto gen = generator(generator_name);
    if (attribute_name == "none") return AttributeDirection::none(gen->latent_dim());
    const auto file =
        cache_dir_ / ("attribute-" + std::string(generator_name) + "-" + std::string(attribute_name) + ".v1.json");
    if (std::filesystem::exists(file)) {
        try {
            auto attr = load_attribute(file);
            if (attr.dim() == gen->latent_dim()) return attr;
        } catch (const Error&) {
        }
    }
    auto attr = derive_attribute(*gen, attribute_name);
    std::filesystem::create_directories(cache_dir_);
    const auto tmp = file.string() + ".tmp";
    save_attribute(attr, tmp);
    std::filesystem::rename(tmp, file);
    return attr;
}

std::shared_ptr<const FaceParser> make_parser(std::string_view name, const std::filesystem::path& annotation_dir) {
    if (name != "fixture") throw NotFoundError("no face parser named '" + std::string(name) + "'");
    return std::make_shared<FixtureParser>(annotation_dir);
}

}  // namespace dualcloak
