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

#include "dualcloak/manifold.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>

#include "dualcloak/errors.hpp"
#include "json.hpp"

namespace dualcloak {

// ---- attributes -----------------------------------------------------------

AttributeDirection AttributeDirection::from_raw(std::string name, std::vector<double> raw, double strength) {
    double norm = 0.0;
    for (double v : raw) norm += v * v;
    norm = std::sqrt(norm);
    if (!(norm > 0.0)) throw ParameterError("attribute direction '" + name + "' is a zero vector");
    for (double& v : raw) v /= norm;
    return {std::move(name), std::move(raw), strength};
}

AttributeDirection AttributeDirection::none(std::size_t dim) {
    if (dim == 0) throw ParameterError("latent dimension must be positive");
    std::vector<double> unit(dim, 0.0);
    unit[0] = 1.0;
    return {"none", std::move(unit), 0.0};
}

void AttributeDirection::validate() const {
    double norm = 0.0;
    for (double v : direction) norm += v * v;
    if (direction.empty() || std::abs(std::sqrt(norm) - 1.0) > 1e-6) {
        throw ParameterError("attribute direction '" + name + "' is not unit length");
    }
    if (!std::isfinite(strength)) throw ParameterError("attribute strength must be finite");
}

AttributeDirection load_attribute(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw NotFoundError("no attribute file at " + path.string());
    try {
        const auto j = nlohmann::json::parse(in);
        AttributeDirection attr{j.at("name").get<std::string>(), j.at("direction").get<std::vector<double>>(),
                                j.at("strength").get<double>()};
        if (j.at("dim").get<std::size_t>() != attr.direction.size()) {
            throw ParameterError("attribute 'dim' does not match the direction length");
        }
        attr.validate();
        return attr;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

void save_attribute(const AttributeDirection& attribute, const std::filesystem::path& path) {
    attribute.validate();
    nlohmann::json j{{"name", attribute.name},
                     {"dim", attribute.dim()},
                     {"direction", attribute.direction},
                     {"strength", attribute.strength}};
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

// ---- ToyIdentityGenerator -------------------------------------------------

ToyIdentityGenerator::ToyIdentityGenerator(Shape shape) : shape_(shape) {
    ImageTensor probe(shape, 0.0);  // validates the shape
}

LatentCode ToyIdentityGenerator::encode(const ImageTensor& image) const {
    if (!(image.shape() == shape_)) {
        throw ManifoldError("toy-identity expects " + to_string(shape_) + ", got " + to_string(image.shape()));
    }
    return {{image.values().begin(), image.values().end()}};
}

ImageTensor ToyIdentityGenerator::generate(std::span<const double> latent) const {
    if (latent.size() != shape_.size()) throw ParameterError("latent has the wrong dimension");
    return ImageTensor::clamped(shape_, {latent.begin(), latent.end()});
}

std::vector<double> ToyIdentityGenerator::backprop(std::span<const double> latent,
                                                   std::span<const double> upstream) const {
    if (latent.size() != shape_.size() || upstream.size() != shape_.size()) {
        throw ParameterError("latent or upstream has the wrong dimension");
    }
    return {upstream.begin(), upstream.end()};
}

// ---- ToyDecoderGenerator --------------------------------------------------

namespace {

double logit(double p) {
    const double c = std::clamp(p, ToyDecoderGenerator::kLogitClip, 1.0 - ToyDecoderGenerator::kLogitClip);
    return std::log(c / (1.0 - c));
}

double sigmoid(double a) { return 1.0 / (1.0 + std::exp(-a)); }

}  // namespace

ToyDecoderGenerator::ToyDecoderGenerator(Shape shape, std::size_t latent_dim, std::vector<double> mean,
                                         std::vector<double> basis, std::vector<double> scales)
    : shape_(shape),
      latent_dim_(latent_dim),
      mean_(std::move(mean)),
      basis_(std::move(basis)),
      scales_(std::move(scales)) {
    if (latent_dim_ == 0 || mean_.size() != shape_.size() || basis_.size() != shape_.size() * latent_dim_ ||
        scales_.size() != latent_dim_) {
        throw ParameterError("inconsistent toy decoder parameters");
    }
}

ToyDecoderGenerator ToyDecoderGenerator::fit(std::span<const ImageTensor> images, std::size_t latent_dim) {
    if (images.size() < 2) throw ParameterError("decoder fit needs at least two images");
    const Shape shape = images.front().shape();
    const auto n = static_cast<Eigen::Index>(images.size());
    const auto p = static_cast<Eigen::Index>(shape.size());
    if (latent_dim == 0 || static_cast<Eigen::Index>(latent_dim) >= n) {
        throw ParameterError("latent_dim must be in [1, number of images)");
    }

    Eigen::MatrixXd data(n, p);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& img = images[static_cast<std::size_t>(i)];
        if (!(img.shape() == shape)) throw ParameterError("decoder fit images must share one shape");
        for (Eigen::Index j = 0; j < p; ++j) data(i, j) = logit(img.values()[static_cast<std::size_t>(j)]);
    }
    const Eigen::RowVectorXd mean = data.colwise().mean();
    data.rowwise() -= mean;

    // Principal directions from the n x n Gram matrix.
    const Eigen::MatrixXd gram = data * data.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
    if (solver.info() != Eigen::Success) throw ManifoldError("eigendecomposition failed while fitting decoder");

    std::vector<double> basis(static_cast<std::size_t>(p) * latent_dim);
    std::vector<double> scales(latent_dim);
    for (std::size_t k = 0; k < latent_dim; ++k) {
        const Eigen::Index col = n - 1 - static_cast<Eigen::Index>(k);  // eigenvalues ascend
        const double eigenvalue = solver.eigenvalues()(col);
        if (!(eigenvalue > 1e-12)) throw ManifoldError("training images span fewer than latent_dim directions");
        Eigen::VectorXd component = data.transpose() * solver.eigenvectors().col(col) / std::sqrt(eigenvalue);
        Eigen::Index peak = 0;
        component.cwiseAbs().maxCoeff(&peak);
        if (component(peak) < 0) component = -component;
        const double stddev = std::sqrt(eigenvalue / static_cast<double>(n - 1));
        scales[k] = stddev;
        for (Eigen::Index j = 0; j < p; ++j) {
            basis[static_cast<std::size_t>(j) * latent_dim + k] = component(j) * stddev;
        }
    }
    return ToyDecoderGenerator(shape, latent_dim, std::vector<double>(mean.data(), mean.data() + p), std::move(basis),
                               std::move(scales));
}

std::vector<double> ToyDecoderGenerator::pre_activation(std::span<const double> latent) const {
    if (latent.size() != latent_dim_) throw ParameterError("latent has the wrong dimension");
    std::vector<double> a(mean_);
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double* row = basis_.data() + j * latent_dim_;
        double acc = 0.0;
        for (std::size_t k = 0; k < latent_dim_; ++k) acc += row[k] * latent[k];
        a[j] += acc;
    }
    return a;
}

LatentCode ToyDecoderGenerator::encode(const ImageTensor& image) const {
    if (!(image.shape() == shape_)) {
        throw ManifoldError("toy-decoder expects " + to_string(shape_) + ", got " + to_string(image.shape()));
    }
    // basis columns are orthogonal with squared norm scale^2.
    LatentCode z{std::vector<double>(latent_dim_, 0.0)};
    const auto values = image.values();
    for (std::size_t j = 0; j < mean_.size(); ++j) {
        const double centered = logit(values[j]) - mean_[j];
        const double* row = basis_.data() + j * latent_dim_;
        for (std::size_t k = 0; k < latent_dim_; ++k) z.values[k] += row[k] * centered;
    }
    for (std::size_t k = 0; k < latent_dim_; ++k) z.values[k] /= scales_[k] * scales_[k];
    return z;
}

ImageTensor ToyDecoderGenerator::generate(std::span<const double> latent) const {
    auto a = pre_activation(latent);
    for (double& v : a) v = sigmoid(v);
    return ImageTensor::clamped(shape_, std::move(a));
}

std::vector<double> ToyDecoderGenerator::backprop(std::span<const double> latent,
                                                  std::span<const double> upstream) const {
    if (upstream.size() != mean_.size()) throw ParameterError("upstream has the wrong dimension");
    const auto a = pre_activation(latent);
    std::vector<double> grad(latent_dim_, 0.0);
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double s = sigmoid(a[j]);
        const double g = upstream[j] * s * (1.0 - s);
        const double* row = basis_.data() + j * latent_dim_;
        for (std::size_t k = 0; k < latent_dim_; ++k) grad[k] += row[k] * g;
    }
    return grad;
}

void ToyDecoderGenerator::save(const std::filesystem::path& path) const {
    nlohmann::json j{{"format", "dualcloak.toydecoder"},
                     {"version", 1},
                     {"shape", {shape_.height, shape_.width, shape_.channels}},
                     {"latent_dim", latent_dim_},
                     {"mean", mean_},
                     {"basis", basis_},
                     {"scales", scales_}};
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw IoError("cannot write " + tmp);
        out << j.dump();
    }
    std::filesystem::rename(tmp, path);
}

ToyDecoderGenerator ToyDecoderGenerator::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw NotFoundError("no decoder file at " + path.string());
    try {
        const auto j = nlohmann::json::parse(in);
        if (j.at("format") != "dualcloak.toydecoder" || j.at("version") != 1) {
            throw FormatError("unsupported decoder format");
        }
        const auto dims = j.at("shape").get<std::vector<int>>();
        if (dims.size() != 3) throw FormatError("shape must list height, width, channels");
        return ToyDecoderGenerator({dims[0], dims[1], dims[2]}, j.at("latent_dim").get<std::size_t>(),
                                   j.at("mean").get<std::vector<double>>(), j.at("basis").get<std::vector<double>>(),
                                   j.at("scales").get<std::vector<double>>());
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

// ---- free functions -------------------------------------------------------

LatentCode encode(const GenerativeModel& generator, const ImageTensor& image) {
    try {
        auto z = generator.encode(image);
        if (z.size() != generator.latent_dim()) throw ManifoldError("encoder returned the wrong latent dimension");
        return z;
    } catch (const ManifoldError&) {
        throw;
    } catch (const std::exception& e) {
        throw ManifoldError(std::string(generator.name()) + ": " + e.what());
    }
}

std::vector<double> attribute_schedule(const AttributeDirection& attribute, int k, int n_total) {
    if (n_total < 1) throw ParameterError("attribute schedule needs N >= 1");
    if (k < 0 || k > n_total) throw ParameterError("schedule index must lie in [0, N]");
    const double ramp = static_cast<double>(k) / static_cast<double>(n_total);
    std::vector<double> offset(attribute.dim());
    for (std::size_t i = 0; i < offset.size(); ++i) offset[i] = ramp * (attribute.strength * attribute.direction[i]);
    return offset;
}

ImageTensor decode_with_offset(const GenerativeModel& generator, std::span<const double> latent,
                               std::span<const double> offset) {
    if (latent.size() != generator.latent_dim() || offset.size() != generator.latent_dim()) {
        throw ParameterError("latent dimension mismatch: generator has d=" + std::to_string(generator.latent_dim()));
    }
    std::vector<double> shifted(latent.size());
    for (std::size_t i = 0; i < shifted.size(); ++i) shifted[i] = latent[i] + offset[i];
    return generator.generate(shifted);
}

ImageTensor decode(const GenerativeModel& generator, const LatentCode& latent, const AttributeDirection& attribute,
                   double attr_scale) {
    if (attribute.dim() != latent.size()) throw ParameterError("attribute and latent dimensions differ");
    std::vector<double> offset(attribute.dim());
    for (std::size_t i = 0; i < offset.size(); ++i) {
        offset[i] = attr_scale * (attribute.strength * attribute.direction[i]);
    }
    return decode_with_offset(generator, latent.values, offset);
}

}  // namespace dualcloak
