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

#include "dualcloak/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "dualcloak/errors.hpp"

namespace dualcloak {

namespace {

// CelebAMask-HQ ids (BiSeNet ordering).
constexpr std::uint8_t kBackground = 0, kSkin = 1, kLeftBrow = 2, kRightBrow = 3, kLeftEye = 4, kRightEye = 5,
                       kNose = 10, kUpperLip = 12, kLowerLip = 13, kNeck = 14, kHair = 17;

struct Rgb {
    double r, g, b;
};

Rgb mix(Rgb a, Rgb b, double t) { return {a.r + (b.r - a.r) * t, a.g + (b.g - a.g) * t, a.b + (b.b - a.b) * t}; }
Rgb scale(Rgb a, double s) { return {a.r * s, a.g * s, a.b * s}; }

/// Fraction of a pixel covered by a region, from a signed distance in pixels
/// (negative inside).
double coverage(double signed_distance_px) { return std::clamp(0.5 - signed_distance_px, 0.0, 1.0); }

double ellipse_distance_px(double du, double dv, double a, double b, int size) {
    const double r = std::sqrt((du / a) * (du / a) + (dv / b) * (dv / b));
    return (r - 1.0) * std::min(a, b) * size;
}

}  // namespace

FaceIdentity random_identity(Rng& rng) {
    FaceIdentity id{};
    const double tone = rng.uniform(0.35, 0.85);
    id.skin[0] = std::min(1.0, tone + 0.08 + rng.uniform(-0.03, 0.03));
    id.skin[1] = tone * rng.uniform(0.78, 0.9);
    id.skin[2] = tone * rng.uniform(0.62, 0.78);
    const double shade = rng.uniform(0.05, 0.75);
    id.hair[0] = shade * rng.uniform(0.9, 1.3);
    id.hair[1] = shade * rng.uniform(0.6, 0.9);
    id.hair[2] = shade * rng.uniform(0.35, 0.7);
    for (double& c : id.hair) c = std::min(c, 1.0);
    id.hair_stripe_period = rng.uniform(2.2, 4.5);
    id.hair_stripe_angle = rng.uniform(0.0, std::numbers::pi);
    id.hair_line = rng.uniform(0.26, 0.38);
    id.face_width = rng.uniform(0.26, 0.34);
    id.face_height = rng.uniform(0.32, 0.40);
    id.eye_spacing = rng.uniform(0.10, 0.15);
    id.eye_row = rng.uniform(0.45, 0.52);
    id.eye_size = rng.uniform(1.2, 2.0);
    id.brow_darkness = rng.uniform(0.3, 0.8);
    id.mouth_width = rng.uniform(0.08, 0.14);
    return id;
}

FaceVariation random_variation(Rng& rng) {
    FaceVariation v;
    v.brightness = rng.uniform(0.85, 1.15);
    v.light_slope = rng.uniform(-0.2, 0.2);
    v.shift_x = static_cast<int>(rng.below(3)) - 1;
    v.shift_y = static_cast<int>(rng.below(3)) - 1;
    v.noise_sd = 0.01;
    v.smile = rng.uniform();
    v.age = rng.uniform(0.0, 0.5);
    for (double& c : v.background) c = rng.uniform(0.15, 0.85);
    v.background_period = rng.uniform(3.0, 8.0);
    v.noise_seed = rng.next();
    return v;
}

SyntheticFace render_face(const FaceIdentity& id, const FaceVariation& var, int size) {
    if (size < 8) throw ParameterError("synthetic faces need at least 8x8 pixels");
    const Shape shape{size, size, 3};
    std::vector<double> pixels(shape.size());
    LabelMap labels{size, size, std::vector<std::uint8_t>(static_cast<std::size_t>(size) * size, kBackground)};
    Rng noise(var.noise_seed);

    const Rgb skin{id.skin[0], id.skin[1], id.skin[2]};
    const Rgb hair = mix({id.hair[0], id.hair[1], id.hair[2]}, {0.72, 0.72, 0.72}, 0.6 * var.age);
    const Rgb background{var.background[0], var.background[1], var.background[2]};
    const Rgb sclera{0.95, 0.95, 0.92};
    const Rgb pupil{0.08, 0.06, 0.05};
    const Rgb lip{0.72, 0.28, 0.3};
    const double two_pi = 2.0 * std::numbers::pi;
    const double cx = 0.5, cy = 0.56;
    const double mouth_row = cy + 0.55 * id.face_height;

    for (int row = 0; row < size; ++row) {
        for (int col = 0; col < size; ++col) {
            const double x = col + 0.5 - var.shift_x;  // pixel units
            const double y = row + 0.5 - var.shift_y;
            const double u = x / size, v = y / size;
            std::uint8_t label = kBackground;

            const double bg_wave = std::sin(two_pi * x / var.background_period) *
                                   std::sin(two_pi * y / var.background_period);
            Rgb color = scale(background, 1.0 + 0.06 * bg_wave);

            // neck
            const double neck = coverage(std::max(std::abs(u - cx) - 0.11, cy + 0.25 - v) * size);
            if (neck > 0) {
                color = mix(color, scale(skin, 0.82), neck);
                if (neck >= 0.5) label = kNeck;
            }

            // hair mass behind the head and fringe over the forehead
            const double stripe = std::sin(two_pi *
                                           (x * std::cos(id.hair_stripe_angle) + y * std::sin(id.hair_stripe_angle)) /
                                           id.hair_stripe_period);
            const Rgb hair_px = scale(hair, 0.78 + 0.22 * stripe);
            const double back_hair =
                coverage(std::max(ellipse_distance_px(u - cx, v - (cy - 0.04), id.face_width + 0.08,
                                                      id.face_height + 0.1, size),
                                  (v - (cy + 0.2)) * size));
            if (back_hair > 0) {
                color = mix(color, hair_px, back_hair);
                if (back_hair >= 0.5) label = kHair;
            }

            const double du = u - cx, dv = v - cy;
            const double face = coverage(ellipse_distance_px(du, dv, id.face_width, id.face_height, size));
            if (face > 0) {
                const double r2 = (du / id.face_width) * (du / id.face_width) + (dv / id.face_height) * (dv / id.face_height);
                Rgb face_px = scale(skin, 1.0 - 0.15 * r2);
                if (var.age > 0) {
                    const double crease_row = id.eye_row + 0.07;
                    const double crease = std::exp(-std::pow((v - crease_row) * size, 2.0)) *
                                          (std::abs(du) > 0.04 ? 1.0 : 0.0);
                    face_px = scale(face_px, 1.0 - 0.25 * var.age * crease);
                }
                const double fringe = coverage((v - id.hair_line) * size);
                face_px = mix(face_px, hair_px, fringe);
                color = mix(color, face_px, face);
                if (face >= 0.5) label = fringe >= 0.5 ? kHair : kSkin;
            }

            if (face >= 0.5 && v > id.hair_line + 0.02) {
                // eyes
                for (int side = 0; side < 2; ++side) {
                    const double ex = cx + (side == 0 ? -id.eye_spacing : id.eye_spacing);
                    const double d_px = std::hypot((u - ex) * size, (v - id.eye_row) * size);
                    const double eye = coverage(d_px - id.eye_size);
                    if (eye > 0) {
                        const Rgb eye_px = mix(sclera, pupil, coverage(d_px - 0.55 * id.eye_size));
                        color = mix(color, eye_px, eye);
                        if (eye >= 0.5) label = side == 0 ? kLeftEye : kRightEye;
                    }
                    const double brow_y = id.eye_row - 0.085;
                    const double brow = coverage(std::max(std::abs(u - ex) * size - 2.6, std::abs(v - brow_y) * size - 0.6));
                    if (brow > 0) {
                        color = mix(color, scale(skin, 1.0 - id.brow_darkness), brow);
                        if (brow >= 0.5) label = side == 0 ? kLeftBrow : kRightBrow;
                    }
                }
                // nose
                const double nose = coverage(std::max(std::abs(du) * size - 0.8,
                                                      std::abs(v - (id.eye_row + 0.08)) * size - 2.0));
                if (nose > 0) {
                    color = mix(color, scale(skin, 0.8), 0.6 * nose);
                    if (nose >= 0.5) label = kNose;
                }
                // mouth: corners lift with the smile
                const double t = du / id.mouth_width;
                if (std::abs(t) < 1.3) {
                    const double curve = mouth_row - var.smile * 0.05 * (t * t) + var.smile * 0.02;
                    const double dist = (v - curve) * size;
                    const double lips = coverage(std::max(std::abs(dist) - 0.9 - 0.4 * var.smile, (std::abs(t) - 1.0) * id.mouth_width * size));
                    if (lips > 0) {
                        color = mix(color, scale(lip, skin.r + 0.2), lips);
                        if (lips >= 0.5) label = dist < 0 ? kUpperLip : kLowerLip;
                    }
                }
            }

            const double light = var.brightness * (1.0 + var.light_slope * (u - 0.5));
            const std::size_t base = (static_cast<std::size_t>(row) * size + col) * 3;
            const double channel[3] = {color.r, color.g, color.b};
            for (int c = 0; c < 3; ++c) {
                const double n = var.noise_sd > 0 ? var.noise_sd * noise.normal() : 0.0;
                pixels[base + c] = std::clamp(channel[c] * light + n, 0.0, 1.0);
            }
            labels.labels[static_cast<std::size_t>(row) * size + col] = label;
        }
    }
    return {ImageTensor(shape, std::move(pixels)), std::move(labels)};
}

std::vector<FaceIdentity> make_identities(int count, std::uint64_t seed) {
    if (count < 0) throw ParameterError("identity count must be >= 0");
    Rng rng(seed);
    std::vector<FaceIdentity> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) out.push_back(random_identity(rng));
    return out;
}

std::vector<LabeledImage> make_labeled_set(const std::vector<FaceIdentity>& identities, int per_identity,
                                           std::uint64_t seed, int size) {
    Rng rng(seed);
    std::vector<LabeledImage> out;
    out.reserve(identities.size() * static_cast<std::size_t>(std::max(per_identity, 0)));
    for (std::size_t i = 0; i < identities.size(); ++i) {
        for (int s = 0; s < per_identity; ++s) {
            out.push_back({render_face(identities[i], random_variation(rng), size).image, static_cast<int>(i)});
        }
    }
    return out;
}

namespace {

std::pair<int, int> distinct_pair(Rng& rng, std::size_t n) {
    if (n < 2) throw ParameterError("need at least two identities to form pairs");
    const auto a = static_cast<int>(rng.below(n));
    auto b = static_cast<int>(rng.below(n - 1));
    if (b >= a) ++b;
    return {a, b};
}

}  // namespace

std::vector<AttackPair> make_attack_pairs(const std::vector<FaceIdentity>& identities, int count,
                                          std::uint64_t seed, int size) {
    Rng rng(seed);
    std::vector<AttackPair> out;
    for (int i = 0; i < count; ++i) {
        const auto [s, t] = distinct_pair(rng, identities.size());
        char name[32];
        std::snprintf(name, sizeof name, "pair_%03d", i);
        auto source = render_face(identities[static_cast<std::size_t>(s)], random_variation(rng), size);
        auto target = render_face(identities[static_cast<std::size_t>(t)], random_variation(rng), size);
        out.push_back({name, std::move(source), std::move(target), s, t});
    }
    return out;
}

std::vector<ImpostorPair> make_impostor_pairs(const std::vector<FaceIdentity>& identities, int count,
                                              std::uint64_t seed, int size) {
    Rng rng(seed);
    std::vector<ImpostorPair> out;
    for (int i = 0; i < count; ++i) {
        const auto [a, b] = distinct_pair(rng, identities.size());
        auto image_a = render_face(identities[static_cast<std::size_t>(a)], random_variation(rng), size).image;
        auto image_b = render_face(identities[static_cast<std::size_t>(b)], random_variation(rng), size).image;
        out.push_back({std::move(image_a), std::move(image_b)});
    }
    return out;
}

void write_pair_fixtures(const std::vector<AttackPair>& pairs, const std::filesystem::path& directory) {
    for (const char* sub : {"sources", "targets", "annotations"}) std::filesystem::create_directories(directory / sub);
    for (const auto& p : pairs) {
        const auto file = p.name + ".png";
        save_image(p.source.image, directory / "sources" / file);
        save_image(p.target.image, directory / "targets" / file);
        save_label_map(p.source.labels, directory / "annotations" / file);
    }
}

}  // namespace dualcloak
