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

// Writes a synthetic fixture set (sources/, targets/, annotations/) plus a
// ready-to-run config.json, and warms the model cache.

#include <iostream>

#include "CLI11.hpp"
#include "dualcloak/config.hpp"
#include "dualcloak/report.hpp"
#include "dualcloak/synthetic.hpp"
#include "dualcloak/zoo.hpp"

int main(int argc, char** argv) {
    using namespace dualcloak;
    CLI::App app{"Generate synthetic face fixtures"};
    std::filesystem::path out;
    int count = 50;
    std::uint64_t seed = 1;
    bool warm = false;
    app.add_option("--out", out, "Fixture directory")->required();
    app.add_option("--pairs", count, "Number of source/target pairs")->check(CLI::PositiveNumber);
    app.add_option("--seed", seed, "Pair sampling seed");
    app.add_flag("--warm-cache", warm, "Train and cache the built-in models");
    CLI11_PARSE(app, argc, argv);

    try {
        const auto identities = make_identities(30, kEvalIdentitySeed);
        write_pair_fixtures(make_attack_pairs(identities, count, seed), out);

        RunConfig cfg;
        cfg.io.input = "sources";
        cfg.io.output = "protected";
        cfg.target_image = "targets";
        cfg.parser.annotations = "annotations";
        cfg.seed = seed;
        write_json_file(config_to_json(cfg), out / "config.json");
        std::cerr << "wrote " << count << " pairs to " << out.string() << '\n';

        if (warm) {
            ModelZoo zoo;
            for (const auto& name : cfg.ensemble) zoo.embedder(name);
            zoo.embedder(cfg.holdout);
            zoo.attribute(cfg.generator, cfg.attribute.name);
            std::cerr << "models cached in " << zoo.cache_dir().string() << '\n';
        }
    } catch (const std::exception& e) {
        std::cerr << "make_fixtures: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
