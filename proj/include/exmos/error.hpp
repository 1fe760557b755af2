// Copyright 2026 The exmos Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef EXMOS_ERROR_HPP_
#define EXMOS_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace exmos {

/// Every failure the library reports. The service maps these onto
/// structured {code, message, detail} payloads, so names are part of the
/// wire contract.
enum class ErrorCode {
  // dataset
  kIoError,
  kEmptyFile,
  kHeaderMismatch,
  kNonNumericCell,
  kInvalidMeta,
  kUnknownFeature,
  kNotNumeric,
  kDegenerateClass,
  kEmptyTable,
  kSchemaMismatch,
  kInvalidArgument,
  // model
  kMissingFeature,
  kZeroBaseline,
  kInvalidModel,
  // quality
  kTooFewRows,
  kTooFewFeatures,
  kMissingIssueKind,
  kDuplicateIssueKind,
  kNotCorrectable,
  kNothingToCorrect,
  // explain
  kMissingPart,
  // steering
  kAllRowsFiltered,
  kInvertedRange,
  kUnknownVersion,
  kNothingUnsaved,
  kJournalCorrupt,
  // analytics
  kEmptyCohort,
  kNoAttempts,
  kNoSuccesses,
  kInvalidEvent,
  // service
  kUnknownSession,
  kInvalidVariant,
  kBadRequest,
  kNotFound,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message, std::string detail = {})
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        message_(std::move(message)),
        detail_(std::move(detail)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& message() const noexcept { return message_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string message_;
  std::string detail_;
};

}  // namespace exmos

#endif  // EXMOS_ERROR_HPP_
