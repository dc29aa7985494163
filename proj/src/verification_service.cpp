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

#include "dualcloak/verification_service.hpp"

#include <sodium.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>

#include "dualcloak/errors.hpp"
#include "httplib.h"
#include "json.hpp"

namespace dualcloak {

namespace {

void ensure_sodium() {
    static const bool ready = sodium_init() >= 0;
    if (!ready) throw Error("libsodium failed to initialize");
}

constexpr int kBase64Variant = sodium_base64_VARIANT_ORIGINAL;

nlohmann::json error_body(const std::string& message) { return {{"error", message}}; }

}  // namespace

std::string base64_encode(std::span<const std::uint8_t> bytes) {
    ensure_sodium();
    std::string out(sodium_base64_encoded_len(bytes.size(), kBase64Variant), '\0');
    sodium_bin2base64(out.data(), out.size(), bytes.data(), bytes.size(), kBase64Variant);
    out.resize(out.size() - 1);  // drop the terminating NUL
    return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
    ensure_sodium();
    std::vector<std::uint8_t> out(text.size() / 4 * 3 + 3);
    std::size_t written = 0;
    const char* end = nullptr;
    if (sodium_base642bin(out.data(), out.size(), text.data(), text.size(), nullptr, &written, &end,
                          kBase64Variant) != 0 ||
        end != text.data() + text.size()) {
        throw FormatError("malformed base64 payload");
    }
    out.resize(written);
    return out;
}

// ---- client ---------------------------------------------------------------

HttpVerificationClient::HttpVerificationClient(std::string endpoint, HttpClientOptions options)
    : endpoint_(std::move(endpoint)), options_(options) {
    while (!endpoint_.empty() && endpoint_.back() == '/') endpoint_.pop_back();
    if (endpoint_.empty()) throw ParameterError("verification endpoint is empty");
    if (options_.retries < 0 || !(options_.timeout_seconds > 0.0)) {
        throw ParameterError("verification client needs retries >= 0 and a positive timeout");
    }
}

double HttpVerificationClient::confidence(const ImageTensor& a, const ImageTensor& b) const {
    const std::string body = nlohmann::json{{"image_a", base64_encode(encode_png(a))},
                                            {"image_b", base64_encode(encode_png(b))}}
                                 .dump();
    httplib::Client client(endpoint_);
    if (!client.is_valid()) throw ParameterError("invalid verification endpoint '" + endpoint_ + "'");
    const auto timeout = std::chrono::duration<double>(options_.timeout_seconds);
    const auto timeout_us = std::chrono::duration_cast<std::chrono::microseconds>(timeout);
    client.set_connection_timeout(timeout_us);
    client.set_read_timeout(timeout_us);
    client.set_write_timeout(timeout_us);

    const int attempts = options_.retries + 1;
    std::string last_failure;
    for (int attempt = 1; attempt <= attempts; ++attempt) {
        if (attempt > 1) std::this_thread::sleep_for(std::chrono::milliseconds(options_.retry_delay_ms));
        const auto res = client.Post("/verify", body, "application/json");
        if (!res) {
            last_failure = httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 500) {
            last_failure = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) {
            throw ProtocolError("verification service answered HTTP " + std::to_string(res->status) + ": " +
                                res->body);
        }
        try {
            const auto j = nlohmann::json::parse(res->body);
            const auto& c = j.at("confidence");
            if (!c.is_number()) throw ProtocolError("'confidence' is not a number");
            return c.get<double>();
        } catch (const nlohmann::json::exception& e) {
            throw ProtocolError(std::string("malformed verification response: ") + e.what());
        }
    }
    throw TransportError("verification request to " + endpoint_ + " failed after " + std::to_string(attempts) +
                             " attempt(s): " + last_failure,
                         attempts);
}

double api_confidence(const VerificationServiceClient& client, const ImageTensor& a, const ImageTensor& b) {
    const double c = client.confidence(a, b);
    if (!std::isfinite(c) || c < 0.0 || c > 100.0) {
        throw ProtocolError("confidence " + std::to_string(c) + " is outside [0, 100]");
    }
    return c;
}

double mean_api_confidence(const VerificationServiceClient& client,
                           std::span<const std::pair<ImageTensor, ImageTensor>> pairs, int parallelism) {
    if (pairs.empty()) throw ParameterError("no pairs to score");
    if (parallelism < 1) throw ParameterError("parallelism must be >= 1");
    std::vector<double> scores(pairs.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&] {
        for (std::size_t i = next++; i < pairs.size(); i = next++) {
            try {
                scores[i] = api_confidence(client, pairs[i].first, pairs[i].second);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = pairs.size();
            }
        }
    };
    {
        std::vector<std::jthread> workers;
        const auto n = std::min<std::size_t>(static_cast<std::size_t>(parallelism), pairs.size());
        for (std::size_t w = 1; w < n; ++w) workers.emplace_back(work);
        work();
    }
    if (failure) std::rethrow_exception(failure);
    double total = 0.0;
    for (double s : scores) total += s;
    return total / static_cast<double>(scores.size());
}

double mock_confidence(const FaceEmbedder& embedder, const ImageTensor& a, const ImageTensor& b) {
    return 100.0 * std::max(0.0, cosine_similarity(embed(embedder, a), embed(embedder, b)));
}

// ---- mock server ----------------------------------------------------------

struct MockVerificationServer::Impl {
    EmbedderPtr embedder;
    httplib::Server server;
};

MockVerificationServer::MockVerificationServer(EmbedderPtr embedder) : impl_(std::make_unique<Impl>()) {
    if (!embedder) throw ParameterError("mock verification server needs an embedder");
    impl_->embedder = std::move(embedder);
    Impl* impl = impl_.get();
    impl->server.Post("/verify", [impl](const httplib::Request& req, httplib::Response& res) {
        try {
            const auto j = nlohmann::json::parse(req.body);
            const auto a = decode_image(base64_decode(j.at("image_a").get<std::string>()));
            const auto b = decode_image(base64_decode(j.at("image_b").get<std::string>()));
            res.set_content(nlohmann::json{{"confidence", mock_confidence(*impl->embedder, a, b)}}.dump(),
                            "application/json");
        } catch (const nlohmann::json::exception& e) {
            res.status = 400;
            res.set_content(error_body(e.what()).dump(), "application/json");
        } catch (const FormatError& e) {
            res.status = 400;
            res.set_content(error_body(e.what()).dump(), "application/json");
        } catch (const std::exception& e) {
            res.status = 500;
            res.set_content(error_body(e.what()).dump(), "application/json");
        }
    });
    impl->server.Get("/health", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"status":"ok"})", "application/json");
    });
}

MockVerificationServer::~MockVerificationServer() { stop(); }

void MockVerificationServer::start(const std::string& host, int port) {
    if (thread_.joinable()) throw ParameterError("mock verification server already running");
    host_ = host;
    port_ = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
    if (port_ < 0) throw IoError("cannot bind mock verification server to " + host + ":" + std::to_string(port));
    thread_ = std::jthread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
}

void MockVerificationServer::listen(const std::string& host, int port) {
    host_ = host;
    port_ = port;
    if (!impl_->server.listen(host, port)) {
        throw IoError("cannot serve on " + host + ":" + std::to_string(port));
    }
}

void MockVerificationServer::stop() {
    if (impl_) impl_->server.stop();
    if (thread_.joinable()) thread_.join();
}

std::string MockVerificationServer::url() const { return "http://" + host_ + ":" + std::to_string(port_); }

}  // namespace dualcloak
