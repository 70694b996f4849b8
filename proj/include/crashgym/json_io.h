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

#ifndef CRASHGYM_JSON_IO_H_
#define CRASHGYM_JSON_IO_H_

#include "crashgym/crash_report.h"
#include "crashgym/gym_types.h"
#include "json.hpp"

// JSON forms of the gym types, shared by the job journal, the HTTP API and
// the result ledgers. Field names are stable. Malformed input throws
// Error(kValidation).
namespace crashgym {

using Json = nlohmann::json;

Json ToJson(const CrashSignature &sig);
CrashSignature SignatureFromJson(const Json &j);

Json ToJson(const BuildJob &job);
BuildJob BuildJobFromJson(const Json &j);

Json ToJson(const ReproJob &job);
ReproJob ReproJobFromJson(const Json &j);

Json ToJson(const BuildOutcome &outcome);
BuildOutcome BuildOutcomeFromJson(const Json &j);

Json ToJson(const ReproOutcome &outcome);
ReproOutcome ReproOutcomeFromJson(const Json &j);

Json ToJson(const Job &job);
Job JobFromJson(const Json &j);

JobState ParseJobState(std::string_view name);
ReproClass ParseReproClass(std::string_view name);

// Compact (or indented) text; invalid UTF-8 in strings is replaced.
std::string DumpJson(const Json &j, int indent = -1);

// Parses text, mapping parse errors to Error(kValidation).
Json ParseJson(std::string_view text);

// Runs `fn`, rethrowing nlohmann type and key errors as Error(kValidation).
template <typename Fn>
auto WithJsonErrors(Fn &&fn) -> decltype(fn());

}  // namespace crashgym

#include "crashgym/error.h"

namespace crashgym {

template <typename Fn>
auto WithJsonErrors(Fn &&fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const nlohmann::json::exception &e) {
    throw Error(ErrorCode::kValidation, e.what());
  }
}

}  // namespace crashgym

#endif  // CRASHGYM_JSON_IO_H_
