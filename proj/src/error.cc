// Copyright 2026 The crashgym Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "crashgym/error.h"

namespace crashgym {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMissingField: return "MissingField";
    case ErrorCode::kUnreadablePath: return "UnreadablePath";
    case ErrorCode::kNoSanitizerHeader: return "NoSanitizerHeader";
    case ErrorCode::kEmptyAccessStack: return "EmptyAccessStack";
    case ErrorCode::kMalformedDiff: return "MalformedDiff";
    case ErrorCode::kNotFound: return "NotFound";
    case ErrorCode::kSpanMismatch: return "SpanMismatch";
    case ErrorCode::kOverlappingEdits: return "OverlappingEdits";
    case ErrorCode::kProviderError: return "ProviderError";
    case ErrorCode::kReplayMiss: return "ReplayMiss";
    case ErrorCode::kUnknownModel: return "UnknownModel";
    case ErrorCode::kProtocolViolation: return "ProtocolViolation";
    case ErrorCode::kRoundsExhausted: return "RoundsExhausted";
    case ErrorCode::kValidation: return "ValidationError";
    case ErrorCode::kUnknownJob: return "UnknownJob";
    case ErrorCode::kUnsupportedToolchain: return "UnsupportedToolchain";
    case ErrorCode::kQueueSaturated: return "QueueSaturated";
    case ErrorCode::kMixedConfigs: return "MixedConfigs";
    case ErrorCode::kUniverseMismatch: return "UniverseMismatch";
    case ErrorCode::kDivisionByZeroBaseline: return "DivisionByZeroBaseline";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kInternal: return "InternalError";
  }
  return "Unknown";
}

ErrorCode ParseErrorCode(std::string_view name) {
  for (int i = 0; i <= static_cast<int>(ErrorCode::kInternal); ++i) {
    auto code = static_cast<ErrorCode>(i);
    if (ErrorCodeName(code) == name) return code;
  }
  return ErrorCode::kInternal;
}

}  // namespace crashgym
