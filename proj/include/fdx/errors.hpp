// SPDX-License-Identifier: Apache-2.0
//
// Copyright 2026 The fdx-hbf Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fdx {

enum class ErrorKind {
    numeric_failure,
    rank_deficient,
    degenerate_input,
    shape_mismatch,
    invalid_parameter,
    geometry,
    acquisition_exhausted,
    config,
    io,
};

inline std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::numeric_failure: return "numeric failure";
    case ErrorKind::rank_deficient: return "rank deficient";
    case ErrorKind::degenerate_input: return "degenerate input";
    case ErrorKind::shape_mismatch: return "shape mismatch";
    case ErrorKind::invalid_parameter: return "invalid parameter";
    case ErrorKind::geometry: return "geometry";
    case ErrorKind::acquisition_exhausted: return "acquisition exhausted";
    case ErrorKind::config: return "config";
    case ErrorKind::io: return "io";
    }
    return "unknown";
}

/// Single exception type for the library; `kind()` drives CLI exit codes.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string &what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

    /// Same kind, message prefixed with `context`.
    Error with_context(const std::string &context) const {
        Error e(*this);
        static_cast<std::runtime_error &>(e) = std::runtime_error(context + ": " + what());
        return e;
    }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string &what) { throw Error(kind, what); }

inline void require(bool condition, ErrorKind kind, const char *what) {
    if (!condition)
        fail(kind, what);
}

} // namespace fdx
