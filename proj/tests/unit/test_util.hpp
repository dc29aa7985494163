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

#include <unistd.h>

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "dualcloak/embedding.hpp"
#include "dualcloak/image.hpp"
#include "dualcloak/random.hpp"

namespace dualcloak::testing {

inline ImageTensor random_image(Shape shape, Rng& rng, double lo = 0.0, double hi = 1.0) {
    std::vector<double> v(shape.size());
    for (double& x : v) x = rng.uniform(lo, hi);
    return ImageTensor(shape, std::move(v));
}

inline EmbedderPtr linear_model(const std::string& name, Shape shape, std::size_t dim, std::uint64_t seed) {
    return std::make_shared<ToyLinearEmbedder>(name, shape, dim, seed);
}

inline EmbedderEnsemble linear_ensemble(Shape shape, int members, std::uint64_t seed, std::size_t dim = 8) {
    std::vector<EmbedderPtr> m;
    for (int i = 0; i < members; ++i) {
        m.push_back(linear_model("lin-" + std::to_string(i), shape, dim, seed + static_cast<std::uint64_t>(i)));
    }
    return EmbedderEnsemble(std::move(m));
}

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("dualcloak-test-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

}  // namespace dualcloak::testing
