/*
 * Copyright 2026 The annoqa Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace annoqa {

enum class ErrorCode {
  kInvalidArgument,
  kImageTooSmall,
  kPointAtInfinity,
  kSingularMatrix,
  kDegenerateConfiguration,
  kInsufficientPairs,
  kNoConsensus,
  kInsufficientMatches,
  kRegionTooSmall,
  kDegenerateTemplate,
  kNonConvergence,
  kTooFewPoints,
  kOutOfRange,
  kLengthMismatch,
  kNoEvaluableFrames,
  kParse,
  kIo,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kImageTooSmall: return "image-too-small";
    case ErrorCode::kPointAtInfinity: return "point-at-infinity";
    case ErrorCode::kSingularMatrix: return "singular-matrix";
    case ErrorCode::kDegenerateConfiguration: return "degenerate-configuration";
    case ErrorCode::kInsufficientPairs: return "insufficient-pairs";
    case ErrorCode::kNoConsensus: return "no-consensus";
    case ErrorCode::kInsufficientMatches: return "insufficient-matches";
    case ErrorCode::kRegionTooSmall: return "region-too-small";
    case ErrorCode::kDegenerateTemplate: return "degenerate-template";
    case ErrorCode::kNonConvergence: return "non-convergence";
    case ErrorCode::kTooFewPoints: return "too-few-points";
    case ErrorCode::kOutOfRange: return "extrapolation-out-of-range";
    case ErrorCode::kLengthMismatch: return "length-mismatch";
    case ErrorCode::kNoEvaluableFrames: return "no-evaluable-frames";
    case ErrorCode::kParse: return "parse-error";
    case ErrorCode::kIo: return "io-error";
  }
  return "unknown";
}

/// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace annoqa
