// Copyright Contributors to the splatguard project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <stdexcept>
#include <string>

namespace splatguard {

// Mirrors the status codes of the C API (splatguard.h); keep the numbering in sync.
enum class ErrorCode : int {
    InvalidArgument = 1,
    ShapeMismatch   = 2,
    Io              = 3,
    Format          = 4,
    Config          = 5,
    Numeric         = 6,
    EmptyScene      = 7,
    InvalidRotation = 8,
    VersionMismatch = 9,
    Truncated       = 10,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string &message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string &message) { throw Error(code, message); }

inline void require(bool condition, ErrorCode code, const std::string &message) {
    if (!condition) fail(code, message);
}

} // namespace splatguard
