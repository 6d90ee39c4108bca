// Copyright 2026 The meatkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "meatkit/error.hpp"

namespace meatkit {

std::string_view error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::InvalidCamera: return "InvalidCamera";
        case ErrorCode::NonPositiveDepth: return "NonPositiveDepth";
        case ErrorCode::DegenerateRotation: return "DegenerateRotation";
        case ErrorCode::InvalidTransform: return "InvalidTransform";
        case ErrorCode::InvalidMesh: return "InvalidMesh";
        case ErrorCode::EmptyMesh: return "EmptyMesh";
        case ErrorCode::InvalidBary: return "InvalidBary";
        case ErrorCode::FaceOutOfRange: return "FaceOutOfRange";
        case ErrorCode::NonDivisibleResolution: return "NonDivisibleResolution";
        case ErrorCode::ResolutionMismatch: return "ResolutionMismatch";
        case ErrorCode::InvalidDepthRange: return "InvalidDepthRange";
        case ErrorCode::EmptyKeySet: return "EmptyKeySet";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::NoMatchingScale: return "NoMatchingScale";
        case ErrorCode::ZeroOrientation: return "ZeroOrientation";
        case ErrorCode::NoIntersection: return "NoIntersection";
        case ErrorCode::EmptyMatchSet: return "EmptyMatchSet";
        case ErrorCode::TooFewKeypoints: return "TooFewKeypoints";
        case ErrorCode::DegenerateUp: return "DegenerateUp";
        case ErrorCode::ZeroExtent: return "ZeroExtent";
        case ErrorCode::BudgetExceeded: return "BudgetExceeded";
        case ErrorCode::Io: return "Io";
        case ErrorCode::Format: return "Format";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace meatkit
