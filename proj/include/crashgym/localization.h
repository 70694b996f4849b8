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

#ifndef CRASHGYM_LOCALIZATION_H_
#define CRASHGYM_LOCALIZATION_H_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "crashgym/bug_dataset.h"
#include "crashgym/crash_report.h"

namespace crashgym {

inline constexpr int kDefaultStackCandidates = 10;
inline constexpr int kDefaultContextBudget = 24000;

inline constexpr std::string_view kCrashReportHeader = "== CRASH REPORT ==";
inline constexpr std::string_view kStackCandidatesHeader =
    "== CALL STACK CANDIDATES ==";
inline constexpr std::string_view kBicHeader = "== BUG-INDUCING COMMIT ==";

struct StackCandidate {
  std::string function;
  std::optional<std::string> file;
  bool operator==(const StackCandidate &) const = default;
};

struct TouchedFunction {
  std::string file;
  std::string function;  // empty when the hunk header names none
  bool operator==(const TouchedFunction &) const = default;
};

// (file, function) per hunk of a unified diff: the file from the "+++"
// header with one path component stripped, the function from the hunk
// header's trailing annotation. Deduplicated, first-seen order.
// Throws Error(kMalformedDiff).
std::vector<TouchedFunction> TouchedFunctions(std::string_view diff);

// Access, alloc and free stack frames in that order, sanitizer frames
// dropped, deduplicated by function, at most `k`.
std::vector<StackCandidate> StackCandidates(const CrashReport &report,
                                            int k = kDefaultStackCandidates);

struct LocalizationContext {
  std::string report_excerpt;
  std::vector<StackCandidate> stack_candidates;
  std::optional<std::string> bic_diff;
  std::vector<TouchedFunction> bic_functions;
  BugType bug_type = BugType::kOther;
  int char_budget = kDefaultContextBudget;
};

// Assembles the localization evidence for one bug. When the rendering
// would exceed `budget`, trailing BIC hunks are dropped whole (then the BIC
// section), then trailing report lines, then trailing stack candidates; at
// least one candidate is always kept. `record.bic` is never consulted: pass
// `bic_diff` to include BIC evidence.
LocalizationContext BuildContext(const BugRecord &record,
                                 const CrashReport &report,
                                 const std::optional<std::string> &bic_diff,
                                 int budget = kDefaultContextBudget,
                                 int k = kDefaultStackCandidates);

// Plain-text rendering with fixed section headers. Never longer than
// `ctx.char_budget` characters.
std::string RenderContext(const LocalizationContext &ctx);

// File hint for `function`: its stack-candidate file, else a BIC file.
std::optional<std::string> FileHintFor(const LocalizationContext &ctx,
                                       std::string_view function);

}  // namespace crashgym

#endif  // CRASHGYM_LOCALIZATION_H_
