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

#ifndef CRASHGYM_ERROR_H_
#define CRASHGYM_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace crashgym {

// Fault categories raised by the library. Classified outcomes (a patch that
// does not apply, a reproducer that crashes) are data and never thrown.
enum class ErrorCode {
  kMissingField,
  kUnreadablePath,
  kNoSanitizerHeader,
  kEmptyAccessStack,
  kMalformedDiff,
  kNotFound,
  kSpanMismatch,
  kOverlappingEdits,
  kProviderError,
  kReplayMiss,
  kUnknownModel,
  kProtocolViolation,
  kRoundsExhausted,
  kValidation,
  kUnknownJob,
  kUnsupportedToolchain,
  kQueueSaturated,
  kMixedConfigs,
  kUniverseMismatch,
  kDivisionByZeroBaseline,
  kIo,
  kInternal,
};

std::string_view ErrorCodeName(ErrorCode code);
// Inverse of ErrorCodeName; unknown names map to kInternal.
ErrorCode ParseErrorCode(std::string_view name);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string &message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  ErrorCode code() const { return code_; }
  // Message without the code prefix.
  const std::string &detail() const { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

// Raised by LLM providers. `retryable` marks transient failures (rate limits,
// 5xx) that the gateway may retry.
class ProviderError : public Error {
 public:
  ProviderError(int status, bool retryable, const std::string &message)
      : Error(ErrorCode::kProviderError,
              "status " + std::to_string(status) + ": " + message),
        status_(status),
        retryable_(retryable) {}

  int status() const { return status_; }
  bool retryable() const { return retryable_; }

 private:
  int status_;
  bool retryable_;
};

}  // namespace crashgym

#endif  // CRASHGYM_ERROR_H_
