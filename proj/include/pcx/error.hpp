// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace pcx {

enum class ErrorCode {
  // geometry
  EmptyCloud,
  InvalidScale,
  DegenerateCloud,
  // scene model
  InvalidScene,
  UnknownInstance,
  // io
  MalformedHeader,
  UnsupportedFormat,
  TruncatedBody,
  CoordinateOverflow,
  MissingFile,
  LengthMismatch,
  UnmappedInstance,
  MalformedLine,
  EmptyRoom,
  UnparsableFilename,
  SchemaViolation,
  IoFailure,
  // synthesis
  InvalidSpec,
  EmptyBank,
  // expansion
  InvalidConfig,
  InfeasibleBudget,
  EmptyScene,
  // metrics
  BothEmpty,
  CrossSceneInput,
  NoGroundTruth,
  UnknownScene,
  InvalidPrediction,
};

const char* error_code_name(ErrorCode code);

/// Exception carrying a stable error code plus a human-readable message.
/// what() is formatted as "<CodeName>: <message>".
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace pcx
