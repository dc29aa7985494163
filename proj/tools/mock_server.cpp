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

// Serves POST /verify backed by a named embedder until interrupted.

#include <iostream>

#include "CLI11.hpp"
#include "dualcloak/verification_service.hpp"
#include "dualcloak/zoo.hpp"

int main(int argc, char** argv) {
    using namespace dualcloak;
    CLI::App app{"Mock face verification service"};
    std::string model = "toyconv-4";
    std::string host = "127.0.0.1";
    int port = 8080;
    app.add_option("--model", model, "Embedder backing the service");
    app.add_option("--host", host, "Bind address");
    app.add_option("--port", port, "Port")->check(CLI::Range(1, 65535));
    CLI11_PARSE(app, argc, argv);

    try {
        ModelZoo zoo;
        MockVerificationServer server(zoo.embedder(model));
        std::cerr << "serving " << model << " on http://" << host << ":" << port << "/verify\n";
        server.listen(host, port);
    } catch (const std::exception& e) {
        std::cerr << "mock_server: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
