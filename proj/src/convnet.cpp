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

#include "dualcloak/convnet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "json.hpp"

#include "dualcloak/errors.hpp"
#include "dualcloak/random.hpp"

namespace dualcloak {

namespace {

constexpr int kKernel = 3;
constexpr int kStride = 2;
constexpr int kPad = 1;

int conv_out(int n) { return (n + 2 * kPad - kKernel) / kStride + 1; }

}  // namespace

struct ToyConvNet::Activations {
    // layer_outputs[0] is the normalized input (CHW); layer_outputs[l + 1] is
    // tanh output of conv layer l.
    std::vector<std::vector<double>> layer_outputs;
    FaceEmbedding embedding;
};

ToyConvNet::ToyConvNet(std::string name, ConvNetArch arch, std::uint64_t seed)
    : FixedInputEmbedder(arch.input), name_(std::move(name)), arch_(std::move(arch)) {
    build_layout();
    Rng rng(seed);
    for (const auto& layer : layers_) {
        const double bound = std::sqrt(3.0 / (layer.in_c * kKernel * kKernel));
        const std::size_t count = static_cast<std::size_t>(layer.out_c) * layer.in_c * kKernel * kKernel;
        for (std::size_t i = 0; i < count; ++i) params_[layer.weight_offset + i] = rng.uniform(-bound, bound);
    }
    const double bound = std::sqrt(3.0 / static_cast<double>(flat_size_));
    for (std::size_t i = 0; i < arch_.embed_dim * flat_size_; ++i) {
        params_[linear_weight_offset_ + i] = rng.uniform(-bound, bound);
    }
}

ToyConvNet::ToyConvNet(std::string name, ConvNetArch arch, std::vector<double> params)
    : FixedInputEmbedder(arch.input), name_(std::move(name)), arch_(std::move(arch)) {
    build_layout();
    if (params.size() != params_.size()) {
        throw ParameterError("parameter count " + std::to_string(params.size()) + " does not match architecture (" +
                             std::to_string(params_.size()) + ")");
    }
    params_ = std::move(params);
}

void ToyConvNet::build_layout() {
    if (arch_.channels.empty() || arch_.embed_dim == 0) throw ParameterError("convnet needs layers and embed_dim");
    std::size_t offset = 0;
    int c = arch_.input.channels;
    int h = arch_.input.height;
    int w = arch_.input.width;
    for (int out_c : arch_.channels) {
        ConvLayer layer{c, out_c, h, w, conv_out(h), conv_out(w), 0, 0};
        if (layer.out_h < 1 || layer.out_w < 1) throw ParameterError("convnet input too small for its depth");
        layer.weight_offset = offset;
        offset += static_cast<std::size_t>(out_c) * c * kKernel * kKernel;
        layer.bias_offset = offset;
        offset += static_cast<std::size_t>(out_c);
        layers_.push_back(layer);
        c = out_c;
        h = layer.out_h;
        w = layer.out_w;
    }
    flat_size_ = static_cast<std::size_t>(c) * h * w;
    linear_weight_offset_ = offset;
    offset += arch_.embed_dim * flat_size_;
    linear_bias_offset_ = offset;
    offset += arch_.embed_dim;
    params_.assign(offset, 0.0);
}

ToyConvNet::Activations ToyConvNet::forward(std::span<const double> pixels) const {
    const auto& in = arch_.input;
    Activations acts;
    acts.layer_outputs.reserve(layers_.size() + 1);

    // HWC [0,1] -> CHW [-1,1]
    std::vector<double> x(in.size());
    for (int r = 0; r < in.height; ++r) {
        for (int col = 0; col < in.width; ++col) {
            for (int ch = 0; ch < in.channels; ++ch) {
                x[(static_cast<std::size_t>(ch) * in.height + r) * in.width + col] =
                    2.0 * pixels[(static_cast<std::size_t>(r) * in.width + col) * in.channels + ch] - 1.0;
            }
        }
    }
    acts.layer_outputs.push_back(std::move(x));

    for (const auto& L : layers_) {
        const auto& src = acts.layer_outputs.back();
        std::vector<double> out(static_cast<std::size_t>(L.out_c) * L.out_h * L.out_w);
        const double* weights = params_.data() + L.weight_offset;
        const double* bias = params_.data() + L.bias_offset;
        for (int o = 0; o < L.out_c; ++o) {
            for (int y = 0; y < L.out_h; ++y) {
                for (int xo = 0; xo < L.out_w; ++xo) {
                    double acc = bias[o];
                    for (int i = 0; i < L.in_c; ++i) {
                        const double* wk = weights + ((static_cast<std::size_t>(o) * L.in_c + i) * kKernel * kKernel);
                        const double* plane = src.data() + static_cast<std::size_t>(i) * L.in_h * L.in_w;
                        for (int ky = 0; ky < kKernel; ++ky) {
                            const int sy = y * kStride + ky - kPad;
                            if (sy < 0 || sy >= L.in_h) continue;
                            for (int kx = 0; kx < kKernel; ++kx) {
                                const int sx = xo * kStride + kx - kPad;
                                if (sx < 0 || sx >= L.in_w) continue;
                                acc += wk[ky * kKernel + kx] * plane[static_cast<std::size_t>(sy) * L.in_w + sx];
                            }
                        }
                    }
                    out[(static_cast<std::size_t>(o) * L.out_h + y) * L.out_w + xo] = std::tanh(acc);
                }
            }
        }
        acts.layer_outputs.push_back(std::move(out));
    }

    const auto& flat = acts.layer_outputs.back();
    acts.embedding.values.assign(arch_.embed_dim, 0.0);
    for (std::size_t e = 0; e < arch_.embed_dim; ++e) {
        const double* row = params_.data() + linear_weight_offset_ + e * flat_size_;
        double acc = params_[linear_bias_offset_ + e];
        for (std::size_t j = 0; j < flat_size_; ++j) acc += row[j] * flat[j];
        acts.embedding.values[e] = acc;
    }
    return acts;
}

std::vector<double> ToyConvNet::backward(const Activations& acts, std::span<const double> upstream,
                                         std::vector<double>* param_grad) const {
    const auto& flat = acts.layer_outputs.back();
    std::vector<double> grad(flat_size_, 0.0);
    for (std::size_t e = 0; e < arch_.embed_dim; ++e) {
        const double u = upstream[e];
        if (u == 0.0) continue;
        const double* row = params_.data() + linear_weight_offset_ + e * flat_size_;
        for (std::size_t j = 0; j < flat_size_; ++j) grad[j] += row[j] * u;
        if (param_grad) {
            double* grow = param_grad->data() + linear_weight_offset_ + e * flat_size_;
            for (std::size_t j = 0; j < flat_size_; ++j) grow[j] += u * flat[j];
            (*param_grad)[linear_bias_offset_ + e] += u;
        }
    }

    for (std::size_t l = layers_.size(); l-- > 0;) {
        const auto& L = layers_[l];
        const auto& out = acts.layer_outputs[l + 1];
        const auto& src = acts.layer_outputs[l];
        // Through tanh.
        for (std::size_t i = 0; i < grad.size(); ++i) grad[i] *= 1.0 - out[i] * out[i];

        std::vector<double> grad_in(src.size(), 0.0);
        const double* weights = params_.data() + L.weight_offset;
        for (int o = 0; o < L.out_c; ++o) {
            for (int y = 0; y < L.out_h; ++y) {
                for (int xo = 0; xo < L.out_w; ++xo) {
                    const double g = grad[(static_cast<std::size_t>(o) * L.out_h + y) * L.out_w + xo];
                    if (g == 0.0) continue;
                    if (param_grad) (*param_grad)[L.bias_offset + static_cast<std::size_t>(o)] += g;
                    for (int i = 0; i < L.in_c; ++i) {
                        const std::size_t wbase = (static_cast<std::size_t>(o) * L.in_c + i) * kKernel * kKernel;
                        const double* wk = weights + wbase;
                        const std::size_t pbase = static_cast<std::size_t>(i) * L.in_h * L.in_w;
                        for (int ky = 0; ky < kKernel; ++ky) {
                            const int sy = y * kStride + ky - kPad;
                            if (sy < 0 || sy >= L.in_h) continue;
                            for (int kx = 0; kx < kKernel; ++kx) {
                                const int sx = xo * kStride + kx - kPad;
                                if (sx < 0 || sx >= L.in_w) continue;
                                const std::size_t p = pbase + static_cast<std::size_t>(sy) * L.in_w + sx;
                                grad_in[p] += wk[ky * kKernel + kx] * g;
                                if (param_grad) {
                                    (*param_grad)[L.weight_offset + wbase + ky * kKernel + kx] += src[p] * g;
                                }
                            }
                        }
                    }
                }
            }
        }
        grad = std::move(grad_in);
    }

    // CHW [-1,1] -> HWC [0,1]
    const auto& in = arch_.input;
    std::vector<double> pixel_grad(in.size());
    for (int r = 0; r < in.height; ++r) {
        for (int col = 0; col < in.width; ++col) {
            for (int ch = 0; ch < in.channels; ++ch) {
                pixel_grad[(static_cast<std::size_t>(r) * in.width + col) * in.channels + ch] =
                    2.0 * grad[(static_cast<std::size_t>(ch) * in.height + r) * in.width + col];
            }
        }
    }
    return pixel_grad;
}

FaceEmbedding ToyConvNet::embed_native(std::span<const double> pixels) const { return forward(pixels).embedding; }

std::vector<double> ToyConvNet::backprop_native(std::span<const double> pixels,
                                                std::span<const double> upstream) const {
    return backward(forward(pixels), upstream, nullptr);
}

std::vector<double> ToyConvNet::embed_and_backprop_native(
    std::span<const double> pixels, const std::function<std::vector<double>(const FaceEmbedding&)>& upstream_of,
    FaceEmbedding& embedding_out) const {
    auto acts = forward(pixels);
    embedding_out = acts.embedding;
    const auto upstream = upstream_of(embedding_out);
    return backward(acts, upstream, nullptr);
}

// ---- training -------------------------------------------------------------

std::vector<double> ToyConvNet::train(const std::vector<LabeledImage>& data, int num_identities,
                                      const ConvNetTraining& options) {
    if (data.empty() || num_identities < 2) throw ParameterError("training needs data and at least two identities");
    const std::size_t dim = arch_.embed_dim;
    Rng rng(options.seed);

    // Cosine-softmax class prototypes, trained jointly and then dropped.
    std::vector<double> prototypes(static_cast<std::size_t>(num_identities) * dim);
    for (double& p : prototypes) p = rng.normal();

    // Adam state over [network params | prototypes].
    const std::size_t n_net = params_.size();
    const std::size_t n_all = n_net + prototypes.size();
    std::vector<double> m(n_all, 0.0), v(n_all, 0.0), grad(n_all, 0.0);
    constexpr double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
    long step = 0;

    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> epoch_losses;
    std::vector<double> net_grad(n_net);
    std::vector<double> noisy;

    for (int epoch = 0; epoch < options.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(options.batch_size)) {
            const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(options.batch_size));
            std::fill(net_grad.begin(), net_grad.end(), 0.0);
            std::vector<double> proto_grad(prototypes.size(), 0.0);
            for (std::size_t b = start; b < end; ++b) {
                const auto& sample = data[order[b]];
                if (!(sample.image.shape() == arch_.input)) throw ParameterError("training image has the wrong shape");
                if (sample.identity < 0 || sample.identity >= num_identities) {
                    throw ParameterError("training label out of range");
                }
                Activations acts;
                if (options.input_noise > 0.0) {
                    noisy.assign(sample.image.values().begin(), sample.image.values().end());
                    for (double& px : noisy) px = std::clamp(px + options.input_noise * rng.normal(), 0.0, 1.0);
                    acts = forward(noisy);
                } else {
                    acts = forward(sample.image.values());
                }
                const auto& e = acts.embedding.values;
                const double e_norm = std::sqrt(std::inner_product(e.begin(), e.end(), e.begin(), 0.0)) + 1e-12;

                std::vector<double> cosines(static_cast<std::size_t>(num_identities));
                std::vector<double> p_norms(cosines.size());
                for (std::size_t c = 0; c < cosines.size(); ++c) {
                    const double* p = prototypes.data() + c * dim;
                    double dot = 0.0, pp = 0.0;
                    for (std::size_t k = 0; k < dim; ++k) {
                        dot += p[k] * e[k];
                        pp += p[k] * p[k];
                    }
                    p_norms[c] = std::sqrt(pp) + 1e-12;
                    cosines[c] = dot / (p_norms[c] * e_norm);
                }
                const double max_logit = options.logit_scale * *std::max_element(cosines.begin(), cosines.end());
                std::vector<double> probs(cosines.size());
                double z = 0.0;
                for (std::size_t c = 0; c < cosines.size(); ++c) {
                    probs[c] = std::exp(options.logit_scale * cosines[c] - max_logit);
                    z += probs[c];
                }
                for (double& p : probs) p /= z;
                const auto label = static_cast<std::size_t>(sample.identity);
                epoch_loss += -std::log(std::max(probs[label], 1e-300));

                // dL/dcos_c = s (p_c - y_c)
                std::vector<double> d_e(dim, 0.0);
                for (std::size_t c = 0; c < cosines.size(); ++c) {
                    const double g = options.logit_scale * (probs[c] - (c == label ? 1.0 : 0.0));
                    const double* p = prototypes.data() + c * dim;
                    double* gp = proto_grad.data() + c * dim;
                    for (std::size_t k = 0; k < dim; ++k) {
                        d_e[k] += g * (p[k] / (p_norms[c] * e_norm) - cosines[c] * e[k] / (e_norm * e_norm));
                        gp[k] += g * (e[k] / (p_norms[c] * e_norm) - cosines[c] * p[k] / (p_norms[c] * p_norms[c]));
                    }
                }
                backward(acts, d_e, &net_grad);
            }
            const double inv = 1.0 / static_cast<double>(end - start);
            for (std::size_t i = 0; i < n_net; ++i) grad[i] = net_grad[i] * inv;
            for (std::size_t i = 0; i < prototypes.size(); ++i) grad[n_net + i] = proto_grad[i] * inv;

            ++step;
            const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
            const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
            for (std::size_t i = 0; i < n_all; ++i) {
                m[i] = beta1 * m[i] + (1 - beta1) * grad[i];
                v[i] = beta2 * v[i] + (1 - beta2) * grad[i] * grad[i];
                const double update = options.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + adam_eps);
                if (i < n_net) {
                    params_[i] -= update;
                } else {
                    prototypes[i - n_net] -= update;
                }
            }
        }
        epoch_losses.push_back(epoch_loss / static_cast<double>(data.size()));
    }
    return epoch_losses;
}

// ---- persistence ----------------------------------------------------------

void ToyConvNet::save(const std::filesystem::path& path) const {
    nlohmann::json j;
    j["format"] = "dualcloak.toyconvnet";
    j["version"] = 1;
    j["name"] = name_;
    j["input"] = {arch_.input.height, arch_.input.width, arch_.input.channels};
    j["channels"] = arch_.channels;
    j["embed_dim"] = arch_.embed_dim;
    j["parameters"] = params_;
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw IoError("cannot write " + tmp);
        out << j.dump();
        if (!out) throw IoError("write failed: " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

ToyConvNet ToyConvNet::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw NotFoundError("no model file at " + path.string());
    try {
        const auto j = nlohmann::json::parse(in);
        if (j.at("format") != "dualcloak.toyconvnet" || j.at("version") != 1) {
            throw FormatError("unsupported model format");
        }
        ConvNetArch arch;
        const auto dims = j.at("input").get<std::vector<int>>();
        if (dims.size() != 3) throw FormatError("input must list height, width, channels");
        arch.input = {dims[0], dims[1], dims[2]};
        arch.channels = j.at("channels").get<std::vector<int>>();
        arch.embed_dim = j.at("embed_dim").get<std::size_t>();
        return ToyConvNet(j.at("name").get<std::string>(), arch, j.at("parameters").get<std::vector<double>>());
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

}  // namespace dualcloak
