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
#include <string>
#include <vector>

#include "dualcloak/convnet.hpp"
#include "dualcloak/image.hpp"
#include "dualcloak/random.hpp"
#include "dualcloak/texture.hpp"

namespace dualcloak {

/// Parameters that stay fixed across every rendering of one synthetic person.
struct FaceIdentity {
    double skin[3];
    double hair[3];
    double hair_stripe_period;  // pixels
    double hair_stripe_angle;   // radians
    double hair_line;           // row of the hair line, fraction of height
    double face_width;          // half-width, fraction of width
    double face_height;         // half-height, fraction of height
    double eye_spacing;         // half-distance, fraction of width
    double eye_row;             // fraction of height
    double eye_size;            // radius, pixels
    double brow_darkness;
    double mouth_width;         // half-width, fraction of width
};

/// Per-sample nuisance and attribute variation.
struct FaceVariation {
    double brightness = 1.0;
    double light_slope = 0.0;  // horizontal brightness ramp
    int shift_x = 0;
    int shift_y = 0;
    double noise_sd = 0.0;
    double smile = 0.0;  // 0 neutral, 1 broad smile
    double age = 0.0;    // 0 young, 1 old (greyer hair, creases)
    double background[3] = {0.5, 0.5, 0.5};
    double background_period = 6.0;  // pixels
    std::uint64_t noise_seed = 0;
};

struct SyntheticFace {
    ImageTensor image;
    LabelMap labels;
};

FaceIdentity random_identity(Rng& rng);
FaceVariation random_variation(Rng& rng);

/// Renders one face and its parsing annotation (CelebAMask-HQ label ids).
SyntheticFace render_face(const FaceIdentity& identity, const FaceVariation& variation, int size = 32);

std::vector<FaceIdentity> make_identities(int count, std::uint64_t seed);

/// `per_identity` randomly varied renderings of every identity.
std::vector<LabeledImage> make_labeled_set(const std::vector<FaceIdentity>& identities, int per_identity,
                                           std::uint64_t seed, int size = 32);

/// One source/target pair for attack experiments; source and target come
/// from different identities.
struct AttackPair {
    std::string name;
    SyntheticFace source;
    SyntheticFace target;
    int source_identity = 0;
    int target_identity = 0;
};

std::vector<AttackPair> make_attack_pairs(const std::vector<FaceIdentity>& identities, int count,
                                          std::uint64_t seed, int size = 32);

/// Images of two different identities, for threshold calibration.
struct ImpostorPair {
    ImageTensor a;
    ImageTensor b;
};

std::vector<ImpostorPair> make_impostor_pairs(const std::vector<FaceIdentity>& identities, int count,
                                              std::uint64_t seed, int size = 32);

/// Seeds of the disjoint identity pools.
inline constexpr std::uint64_t kTrainIdentitySeed = 0x7261696eULL;
inline constexpr std::uint64_t kEvalIdentitySeed = 0x6576616cULL;

/// Writes sources/, targets/ and annotations/ (NAME.png in each) for `pairs`.
void write_pair_fixtures(const std::vector<AttackPair>& pairs, const std::filesystem::path& directory);

}  // namespace dualcloak
