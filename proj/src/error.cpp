// SPDX-License-Identifier: Apache-2.0

#include "pcx/error.hpp"

namespace pcx {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyCloud: return "EmptyCloud";
    case ErrorCode::InvalidScale: return "InvalidScale";
    case ErrorCode::DegenerateCloud: return "DegenerateCloud";
    case ErrorCode::InvalidScene: return "InvalidScene";
    case ErrorCode::UnknownInstance: return "UnknownInstance";
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::TruncatedBody: return "TruncatedBody";
    case ErrorCode::CoordinateOverflow: return "CoordinateOverflow";
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::UnmappedInstance: return "UnmappedInstance";
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::EmptyRoom: return "EmptyRoom";
    case ErrorCode::UnparsableFilename: return "UnparsableFilename";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::EmptyBank: return "EmptyBank";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::InfeasibleBudget: return "InfeasibleBudget";
    case ErrorCode::EmptyScene: return "EmptyScene";
    case ErrorCode::BothEmpty: return "BothEmpty";
    case ErrorCode::CrossSceneInput: return "CrossSceneInput";
    case ErrorCode::NoGroundTruth: return "NoGroundTruth";
    case ErrorCode::UnknownScene: return "UnknownScene";
    case ErrorCode::InvalidPrediction: return "InvalidPrediction";
  }
  return "Unknown";
}

}  // namespace pcx
