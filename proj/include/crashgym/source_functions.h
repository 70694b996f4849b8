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

#ifndef CRASHGYM_SOURCE_FUNCTIONS_H_
#define CRASHGYM_SOURCE_FUNCTIONS_H_

#include <atomic>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace crashgym {

// Returns `text` with comment bodies, string/char literal contents and
// preprocessor lines replaced by spaces. Newlines and length are preserved,
// so offsets and line numbers carry over to the original.
std::string MaskSource(std::string_view text);

// Net '{' minus '}' of `text` outside comments and literals.
int BraceBalance(std::string_view text);

struct FunctionDef {
  std::string name;
  std::string file;  // tree-relative
  int start_line = 0;  // 1-based, inclusive
  int end_line = 0;
  std::string text;  // lines [start_line, end_line] without the final newline

  bool operator==(const FunctionDef &) const = default;
};

// All definitions of `name` in one file's text, in file order. A definition
// is `name` at brace depth 0 followed by a parameter list and then '{'
// before any ';'. The span starts at the first line of the declaration
// (return type, storage class) and ends at the matching '}'.
std::vector<FunctionDef> FindDefinitions(std::string_view text,
                                         std::string_view name,
                                         std::string_view file);

// Read-only handle on a checked-out source tree. The identifier index is
// built once on first use; afterwards all queries are safe to run
// concurrently.
class SourceTree {
 public:
  explicit SourceTree(std::filesystem::path root);

  const std::filesystem::path &root() const { return root_; }
  bool Exists(std::string_view rel) const;
  std::string Read(std::string_view rel) const;

  // Files containing a definition-shaped occurrence of `name`, sorted.
  std::vector<std::string> FilesMentioning(std::string_view name) const;

  // Number of Read() calls so far.
  size_t read_count() const { return reads_.load(); }

 private:
  void BuildIndex() const;

  std::filesystem::path root_;
  mutable std::once_flag index_once_;
  mutable std::map<std::string, std::vector<std::string>, std::less<>> index_;
  mutable std::atomic<size_t> reads_{0};
};

// Definitions of `name` in the tree. The hinted file is searched first and
// its matches lead the result. Throws Error(kNotFound).
std::vector<FunctionDef> LocateFunction(
    const SourceTree &tree, std::string_view name,
    const std::optional<std::string> &file_hint = std::nullopt);

struct FunctionEdit {
  FunctionDef target;
  std::string replacement;
};

// Throws Error(kValidation) when the replacement is empty or its braces do
// not balance.
void ValidateEdit(const FunctionEdit &edit);

// Replaces exactly the target's span. Throws Error(kSpanMismatch) when
// `file_text` no longer holds the target text at its recorded lines.
std::string ReplaceFunction(std::string_view file_text,
                            const FunctionEdit &edit);

struct CandidatePatch {
  std::string base_commit;
  std::vector<FunctionEdit> edits;
  std::string diff;
};

// One unified diff (3 context lines, a/ b/ prefixes) for all edits, file
// sections in path order. Throws Error(kOverlappingEdits),
// Error(kSpanMismatch), Error(kValidation).
CandidatePatch SynthesizePatch(const SourceTree &tree,
                               std::string_view base_commit,
                               const std::vector<FunctionEdit> &edits);

struct ApplyCheck {
  bool ok = true;
  std::string reason;  // first failure, "<file>: hunk #N ..." when located
  std::string file;
  int hunk = -1;  // 0-based
};

struct PatchApplication {
  ApplyCheck check;
  // Patched contents keyed by tree-relative path; nullopt for deletions.
  std::map<std::string, std::optional<std::string>> files;
};

// Applies `diff` at strip level 1 against the tree without writing to it.
PatchApplication ApplyDiff(const SourceTree &tree, std::string_view diff);

// Dry-run: ok, or the first failing location. Never throws for bad diffs.
ApplyCheck CheckApplies(const SourceTree &tree, std::string_view diff);

}  // namespace crashgym

#endif  // CRASHGYM_SOURCE_FUNCTIONS_H_
