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

#ifndef CRASHGYM_UNIFIED_DIFF_H_
#define CRASHGYM_UNIFIED_DIFF_H_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace crashgym {

inline constexpr int kDefaultDiffContext = 3;

struct HunkLine {
  char op = ' ';  // ' ', '-', '+'
  std::string text;  // without the line terminator
  bool eol = true;  // false when followed by "\ No newline at end of file"

  bool operator==(const HunkLine &) const = default;
};

struct Hunk {
  int old_start = 0;
  int old_count = 0;
  int new_start = 0;
  int new_count = 0;
  std::string section;  // text after the closing "@@", trimmed
  std::vector<HunkLine> lines;
};

struct FilePatch {
  std::string old_path;  // as written, e.g. "a/net/core/sock.c" or "/dev/null"
  std::string new_path;
  std::vector<Hunk> hunks;
};

// Parses every file section of a unified diff. Text outside file sections
// (commit messages, "index" lines) is ignored. Throws Error(kMalformedDiff)
// for hunk headers outside a file section, unparseable headers, and hunks
// whose body is shorter than the header counts.
std::vector<FilePatch> ParseUnifiedDiff(std::string_view diff);

// Drops `strip` leading path components; "/dev/null" is returned unchanged.
std::string StripPath(std::string_view path, int strip);

// Unified diff of one file (with "diff --git", "---" and "+++" headers and
// `a/` `b/` prefixes). Empty when the texts are equal.
std::string DiffFiles(std::string_view path, std::string_view old_text,
                      std::string_view new_text,
                      int context = kDefaultDiffContext);

// Renders one hunk header plus body.
std::string FormatHunk(const Hunk &hunk);

struct ApplyResult {
  bool ok = false;
  std::string text;  // patched file when ok
  int failed_hunk = -1;  // 0-based index of the first hunk that did not match
  std::string error;
};

// Applies `patch` to `original`. Hunks must match exactly (no fuzz) but may
// sit at an offset from their header position, as git-style appliers allow.
ApplyResult ApplyFilePatch(std::string_view original, const FilePatch &patch);

}  // namespace crashgym

#endif  // CRASHGYM_UNIFIED_DIFF_H_
