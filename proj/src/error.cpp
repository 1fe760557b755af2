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

#include "exmos/error.hpp"

namespace exmos {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kEmptyFile: return "EmptyFile";
    case ErrorCode::kHeaderMismatch: return "HeaderMismatch";
    case ErrorCode::kNonNumericCell: return "NonNumericCell";
    case ErrorCode::kInvalidMeta: return "InvalidMeta";
    case ErrorCode::kUnknownFeature: return "UnknownFeature";
    case ErrorCode::kNotNumeric: return "NotNumeric";
    case ErrorCode::kDegenerateClass: return "DegenerateClass";
    case ErrorCode::kEmptyTable: return "EmptyTable";
    case ErrorCode::kSchemaMismatch: return "SchemaMismatch";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kMissingFeature: return "MissingFeature";
    case ErrorCode::kZeroBaseline: return "ZeroBaseline";
    case ErrorCode::kInvalidModel: return "InvalidModel";
    case ErrorCode::kTooFewRows: return "TooFewRows";
    case ErrorCode::kTooFewFeatures: return "TooFewFeatures";
    case ErrorCode::kMissingIssueKind: return "MissingIssueKind";
    case ErrorCode::kDuplicateIssueKind: return "DuplicateIssueKind";
    case ErrorCode::kNotCorrectable: return "NotCorrectable";
    case ErrorCode::kNothingToCorrect: return "NothingToCorrect";
    case ErrorCode::kMissingPart: return "MissingPart";
    case ErrorCode::kAllRowsFiltered: return "AllRowsFiltered";
    case ErrorCode::kInvertedRange: return "InvertedRange";
    case ErrorCode::kUnknownVersion: return "UnknownVersion";
    case ErrorCode::kNothingUnsaved: return "NothingUnsaved";
    case ErrorCode::kJournalCorrupt: return "JournalCorrupt";
    case ErrorCode::kEmptyCohort: return "EmptyCohort";
    case ErrorCode::kNoAttempts: return "NoAttempts";
    case ErrorCode::kNoSuccesses: return "NoSuccesses";
    case ErrorCode::kInvalidEvent: return "InvalidEvent";
    case ErrorCode::kUnknownSession: return "UnknownSession";
    case ErrorCode::kInvalidVariant: return "InvalidVariant";
    case ErrorCode::kBadRequest: return "BadRequest";
    case ErrorCode::kNotFound: return "NotFound";
  }
  return "Unknown";
}

}  // namespace exmos
