// Copyright 2026 The meatkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace meatkit {

enum class ErrorCode {
    InvalidArgument,
    InvalidCamera,
    NonPositiveDepth,
    DegenerateRotation,
    InvalidTransform,
    InvalidMesh,
    EmptyMesh,
    InvalidBary,
    FaceOutOfRange,
    NonDivisibleResolution,
    ResolutionMismatch,
    InvalidDepthRange,
    EmptyKeySet,
    ShapeMismatch,
    NoMatchingScale,
    ZeroOrientation,
    NoIntersection,
    EmptyMatchSet,
    TooFewKeypoints,
    DegenerateUp,
    ZeroExtent,
    BudgetExceeded,
    Io,
    Format,
};

std::string_view error_code_name(ErrorCode code);

// All library failures surface as this exception; `code()` identifies the contract
// that was violated.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message);

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace meatkit
