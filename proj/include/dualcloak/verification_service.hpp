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
#include <memory>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "dualcloak/embedding.hpp"
#include "dualcloak/image.hpp"

namespace dualcloak {

std::string base64_encode(std::span<const std::uint8_t> bytes);
/// FormatError for malformed input.
std::vector<std::uint8_t> base64_decode(std::string_view text);

/// Same-identity confidence in [0, 100] from a remote face verification API.
class VerificationServiceClient {
public:
    virtual ~VerificationServiceClient() = default;
    virtual double confidence(const ImageTensor& a, const ImageTensor& b) const = 0;
};

struct HttpClientOptions {
    double timeout_seconds = 10.0;
    /// Extra attempts after the first on transport failures and 5xx replies.
    int retries = 2;
    int retry_delay_ms = 100;
};

/// POST {endpoint}/verify with {"image_a": b64 PNG, "image_b": b64 PNG};
/// expects {"confidence": float}.
class HttpVerificationClient final : public VerificationServiceClient {
public:
    /// `endpoint` is a base URL such as "http://127.0.0.1:8080".
    explicit HttpVerificationClient(std::string endpoint, HttpClientOptions options = {});

    double confidence(const ImageTensor& a, const ImageTensor& b) const override;
    const std::string& endpoint() const { return endpoint_; }

private:
    std::string endpoint_;
    HttpClientOptions options_;
};

/// Checks the [0, 100] contract; ProtocolError otherwise.
double api_confidence(const VerificationServiceClient& client, const ImageTensor& a, const ImageTensor& b);

/// Mean confidence over pairs, with at most `parallelism` requests in flight.
double mean_api_confidence(const VerificationServiceClient& client,
                           std::span<const std::pair<ImageTensor, ImageTensor>> pairs, int parallelism = 1);

/// 100 * max(0, cos) under `embedder`.
double mock_confidence(const FaceEmbedder& embedder, const ImageTensor& a, const ImageTensor& b);

/// In-process HTTP stand-in for a commercial verification API, scoring with
/// a local embedder. Serves concurrent requests.
class MockVerificationServer {
public:
    explicit MockVerificationServer(EmbedderPtr embedder);
    ~MockVerificationServer();
    MockVerificationServer(const MockVerificationServer&) = delete;
    MockVerificationServer& operator=(const MockVerificationServer&) = delete;

    /// Binds (port 0 picks a free port) and serves on a background thread.
    void start(const std::string& host = "127.0.0.1", int port = 0);
    /// Serves on the calling thread until stop() is called.
    void listen(const std::string& host, int port);
    void stop();

    int port() const { return port_; }
    std::string url() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::jthread thread_;
    std::string host_;
    int port_ = 0;
};

}  // namespace dualcloak
