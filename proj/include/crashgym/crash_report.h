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

#ifndef CRASHGYM_CRASH_REPORT_H_
#define CRASHGYM_CRASH_REPORT_H_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace crashgym {

struct StackFrame {
  std::string function;
  std::optional<std::string> file;
  std::optional<int> line;  // only set together with `file`
  std::optional<std::string> offset;  // "+0x12/0x34"
  bool inlined = false;

  bool operator==(const StackFrame &) const = default;
};

enum class Sanitizer { kKasan, kOther };

struct CrashReport {
  std::string title;
  Sanitizer sanitizer = Sanitizer::kOther;
  std::vector<StackFrame> access_stack;
  std::optional<std::vector<StackFrame>> alloc_stack;
  std::optional<std::vector<StackFrame>> free_stack;
  std::string raw;
};

struct CrashSignature {
  std::string normalized_title;
  std::vector<std::string> top_frames;

  bool operator==(const CrashSignature &) const = default;
};

inline constexpr int kDefaultSignatureFrames = 3;

// Parses a kernel console crash report. The title follows the crash-dashboard
// convention ("KASAN: use-after-free Read in foo"). Throws
// Error(kNoSanitizerHeader) when no crash header is present and
// Error(kEmptyAccessStack) for a KASAN report without an access stack.
CrashReport ParseReport(std::string_view text);

// Parses one frame line ("  foo+0x1f/0x80 net/core/sock.c:123 [inline]").
// Returns nullopt for lines that are not frames.
std::optional<StackFrame> ParseFrameLine(std::string_view line);

// True for frames belonging to the sanitizer runtime or the report printer;
// they sit atop every report and are skipped when ranking frames.
bool IsSanitizerFrame(std::string_view function);

// Replaces addresses, hex constants, task/pid numbers and timestamps with
// placeholders. Idempotent.
std::string NormalizeTitle(std::string_view title);

CrashSignature Signature(const CrashReport &report,
                         int k = kDefaultSignatureFrames);

// Equality of normalized title and top frames.
bool SameCrash(const CrashSignature &a, const CrashSignature &b);

}  // namespace crashgym

#endif  // CRASHGYM_CRASH_REPORT_H_
