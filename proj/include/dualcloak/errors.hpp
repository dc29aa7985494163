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

#include <stdexcept>
#include <string>

namespace dualcloak {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid argument, shape mismatch or out-of-range hyperparameter.
class ParameterError : public Error {
public:
    using Error::Error;
};

class NotFoundError : public Error {
public:
    using Error::Error;
};

/// Bytes that cannot be decoded as a supported image format.
class FormatError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class EmbedError : public Error {
public:
    using Error::Error;
};

/// Raised when cosine similarity is requested for an all-zero embedding.
class DegenerateEmbeddingError : public Error {
public:
    using Error::Error;
};

class ManifoldError : public Error {
public:
    using Error::Error;
};

/// Network failure talking to a verification service. Carries the number
/// of attempts that were made before giving up.
class TransportError : public Error {
public:
    TransportError(const std::string& what, int attempts)
        : Error(what + " (after " + std::to_string(attempts) + " attempt(s))"), attempts_(attempts) {}

    int attempts() const noexcept { return attempts_; }

private:
    int attempts_;
};

/// The peer answered, but not in the documented wire format.
class ProtocolError : public Error {
public:
    using Error::Error;
};

/// Bad configuration or command-line usage; maps to exit code 2.
class UsageError : public Error {
public:
    using Error::Error;
};

}  // namespace dualcloak
