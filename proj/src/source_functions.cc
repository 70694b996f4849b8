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

#include "crashgym/source_functions.h"

#include <algorithm>
#include <set>

#include "crashgym/error.h"
#include "crashgym/unified_diff.h"
#include "crashgym/util.h"

namespace crashgym {
namespace {

namespace fs = std::filesystem;

std::vector<size_t> LineStarts(std::string_view text) {
  std::vector<size_t> starts = {0};
  for (size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '\n') starts.push_back(i + 1);
  }
  return starts;
}

// 1-based line containing offset `pos`.
int LineOf(const std::vector<size_t> &starts, size_t pos) {
  auto it = std::upper_bound(starts.begin(), starts.end(), pos);
  return static_cast<int>(it - starts.begin());
}

bool IsSpace(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

// Offset of the '{' opening the body when the identifier ending at
// `after_name` starts a definition.
std::optional<size_t> DefinitionBody(std::string_view masked,
                                     size_t after_name) {
  size_t j = after_name;
  while (j < masked.size() && IsSpace(masked[j])) ++j;
  if (j >= masked.size() || masked[j] != '(') return std::nullopt;
  int parens = 0;
  size_t k = j;
  for (; k < masked.size(); ++k) {
    if (masked[k] == '(') ++parens;
    if (masked[k] == ')' && --parens == 0) break;
  }
  if (k >= masked.size()) return std::nullopt;
  parens = 0;
  for (size_t m = k + 1; m < masked.size(); ++m) {
    char c = masked[m];
    if (c == '(') {
      ++parens;
    } else if (c == ')') {
      --parens;
    } else if (parens == 0) {
      if (c == '{') return m;
      if (c == ';' || c == '=' || c == '}' || c == ',') return std::nullopt;
    }
  }
  return std::nullopt;
}

std::optional<size_t> MatchingBrace(std::string_view masked, size_t open) {
  int depth = 0;
  for (size_t i = open; i < masked.size(); ++i) {
    if (masked[i] == '{') ++depth;
    if (masked[i] == '}' && --depth == 0) return i;
  }
  return std::nullopt;
}

// Visits identifiers at brace depth 0: fn(start, end).
template <typename Fn>
void ForEachTopLevelIdentifier(std::string_view masked, Fn &&fn) {
  int depth = 0;
  size_t i = 0;
  while (i < masked.size()) {
    char c = masked[i];
    if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (depth > 0) --depth;
    } else if (IsIdentChar(c) && (i == 0 || !IsIdentChar(masked[i - 1]))) {
      size_t end = i;
      while (end < masked.size() && IsIdentChar(masked[end])) ++end;
      if (depth == 0 && !std::isdigit(static_cast<unsigned char>(c))) {
        fn(i, end);
      }
      i = end;
      continue;
    }
    ++i;
  }
}

bool IsSourceFile(const fs::path &p) {
  auto ext = p.extension();
  return ext == ".c" || ext == ".h";
}

}  // namespace

std::string MaskSource(std::string_view text) {
  enum class State { kCode, kLineComment, kBlockComment, kString, kChar, kPreproc };
  std::string out(text);
  State state = State::kCode;
  State after_block = State::kCode;
  bool line_start = true;
  auto blank = [&](size_t i) {
    if (out[i] != '\n') out[i] = ' ';
  };
  for (size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    char next = i + 1 < text.size() ? text[i + 1] : '\0';
    switch (state) {
      case State::kCode:
        if (c == '/' && next == '/') {
          state = State::kLineComment;
          blank(i);
        } else if (c == '/' && next == '*') {
          state = State::kBlockComment;
          after_block = State::kCode;
          blank(i);
          blank(++i);
        } else if (c == '"') {
          state = State::kString;
        } else if (c == '\'') {
          state = State::kChar;
        } else if (c == '#' && line_start) {
          state = State::kPreproc;
          blank(i);
        }
        break;
      case State::kLineComment:
        if (c == '\n') {
          state = State::kCode;
        } else {
          blank(i);
        }
        break;
      case State::kBlockComment:
        blank(i);
        if (c == '*' && next == '/') {
          blank(++i);
          state = after_block;
        }
        break;
      case State::kString:
      case State::kChar: {
        char quote = state == State::kString ? '"' : '\'';
        if (c == '\\' && next != '\0') {
          blank(i);
          if (next != '\n') blank(++i); else ++i;
        } else if (c == quote || c == '\n') {
          state = State::kCode;
        } else {
          blank(i);
        }
        break;
      }
      case State::kPreproc:
        if (c == '\\' && next == '\n') {
          blank(i);
          ++i;  // keep the newline, stay in the directive
        } else if (c == '/' && next == '*') {
          state = State::kBlockComment;
          after_block = State::kPreproc;
          blank(i);
          blank(++i);
        } else if (c == '\n') {
          state = State::kCode;
        } else {
          blank(i);
        }
        break;
    }
    if (text[i] == '\n') {
      line_start = true;
    } else if (!IsSpace(text[i]) && state != State::kBlockComment) {
      line_start = false;
    }
  }
  return out;
}

int BraceBalance(std::string_view text) {
  std::string masked = MaskSource(text);
  int balance = 0;
  for (char c : masked) {
    if (c == '{') ++balance;
    if (c == '}') --balance;
  }
  return balance;
}

std::vector<FunctionDef> FindDefinitions(std::string_view text,
                                         std::string_view name,
                                         std::string_view file) {
  std::vector<FunctionDef> defs;
  if (name.empty()) return defs;
  std::string masked = MaskSource(text);
  std::vector<size_t> starts = LineStarts(text);
  size_t resume = 0;
  ForEachTopLevelIdentifier(masked, [&](size_t begin, size_t end) {
    if (begin < resume) return;
    if (std::string_view(masked).substr(begin, end - begin) != name) return;
    auto open = DefinitionBody(masked, end);
    if (!open) return;
    auto close = MatchingBrace(masked, *open);
    if (!close) return;
    size_t p = begin;
    while (p > 0 && masked[p - 1] != ';' && masked[p - 1] != '{' &&
           masked[p - 1] != '}') {
      --p;
    }
    while (p < begin && IsSpace(masked[p])) ++p;
    FunctionDef def;
    def.name = std::string(name);
    def.file = std::string(file);
    def.start_line = LineOf(starts, p);
    def.end_line = LineOf(starts, *close);
    size_t from = starts[def.start_line - 1];
    size_t to = def.end_line < static_cast<int>(starts.size())
                    ? starts[def.end_line] - 1
                    : text.size();
    def.text = std::string(text.substr(from, to - from));
    defs.push_back(std::move(def));
    resume = *close;
  });
  return defs;
}

SourceTree::SourceTree(fs::path root) : root_(std::move(root)) {}

bool SourceTree::Exists(std::string_view rel) const {
  std::error_code ec;
  return fs::is_regular_file(root_ / fs::path(rel), ec);
}

std::string SourceTree::Read(std::string_view rel) const {
  ++reads_;
  return ReadFile(root_ / fs::path(rel));
}

void SourceTree::BuildIndex() const {
  std::error_code ec;
  std::vector<std::string> files;
  for (auto it = fs::recursive_directory_iterator(root_, ec);
       !ec && it != fs::recursive_directory_iterator(); it.increment(ec)) {
    if (it->is_regular_file() && IsSourceFile(it->path())) {
      files.push_back(fs::relative(it->path(), root_).generic_string());
    }
  }
  std::sort(files.begin(), files.end());
  for (const auto &file : files) {
    std::string text = ReadFile(root_ / file);
    std::string masked = MaskSource(text);
    std::set<std::string, std::less<>> seen;
    ForEachTopLevelIdentifier(masked, [&](size_t begin, size_t end) {
      size_t j = end;
      while (j < masked.size() && IsSpace(masked[j])) ++j;
      if (j < masked.size() && masked[j] == '(') {
        seen.insert(masked.substr(begin, end - begin));
      }
    });
    for (const auto &name : seen) index_[name].push_back(file);
  }
}

std::vector<std::string> SourceTree::FilesMentioning(
    std::string_view name) const {
  std::call_once(index_once_, [this] { BuildIndex(); });
  auto it = index_.find(name);
  if (it == index_.end()) return {};
  return it->second;
}

std::vector<FunctionDef> LocateFunction(
    const SourceTree &tree, std::string_view name,
    const std::optional<std::string> &file_hint) {
  std::vector<std::string> files;
  if (file_hint && tree.Exists(*file_hint)) files.push_back(*file_hint);
  for (auto &f : tree.FilesMentioning(name)) {
    if (!file_hint || f != *file_hint) files.push_back(std::move(f));
  }
  std::vector<FunctionDef> defs;
  for (const auto &file : files) {
    auto found = FindDefinitions(tree.Read(file), name, file);
    defs.insert(defs.end(), found.begin(), found.end());
  }
  if (defs.empty()) {
    throw Error(ErrorCode::kNotFound, "no definition of " + std::string(name));
  }
  return defs;
}

void ValidateEdit(const FunctionEdit &edit) {
  if (Trim(edit.replacement).empty()) {
    throw Error(ErrorCode::kValidation,
                "empty replacement for " + edit.target.name);
  }
  if (BraceBalance(edit.replacement) != 0) {
    throw Error(ErrorCode::kValidation,
                "unbalanced braces in replacement for " + edit.target.name);
  }
}

std::string ReplaceFunction(std::string_view file_text,
                            const FunctionEdit &edit) {
  const FunctionDef &t = edit.target;
  std::vector<size_t> starts = LineStarts(file_text);
  auto mismatch = [&] {
    return Error(ErrorCode::kSpanMismatch,
                 t.file + ":" + std::to_string(t.start_line) + "-" +
                     std::to_string(t.end_line) + " no longer holds " + t.name);
  };
  if (t.start_line < 1 || t.start_line > static_cast<int>(starts.size())) {
    throw mismatch();
  }
  size_t from = starts[t.start_line - 1];
  size_t to = from + t.text.size();
  if (to > file_text.size() || file_text.substr(from, t.text.size()) != t.text ||
      (to < file_text.size() && file_text[to] != '\n') ||
      LineOf(starts, to == from ? from : to - 1) != t.end_line) {
    throw mismatch();
  }
  std::string out;
  out.reserve(file_text.size() + edit.replacement.size());
  out.append(file_text.substr(0, from));
  out.append(edit.replacement);
  out.append(file_text.substr(to));
  return out;
}

CandidatePatch SynthesizePatch(const SourceTree &tree,
                               std::string_view base_commit,
                               const std::vector<FunctionEdit> &edits) {
  std::map<std::string, std::vector<const FunctionEdit *>> by_file;
  for (const auto &edit : edits) {
    ValidateEdit(edit);
    by_file[edit.target.file].push_back(&edit);
  }
  CandidatePatch patch;
  patch.base_commit = std::string(base_commit);
  patch.edits = edits;
  for (auto &[file, file_edits] : by_file) {
    std::sort(file_edits.begin(), file_edits.end(),
              [](const FunctionEdit *a, const FunctionEdit *b) {
                return a->target.start_line < b->target.start_line;
              });
    for (size_t i = 1; i < file_edits.size(); ++i) {
      if (file_edits[i]->target.start_line <=
          file_edits[i - 1]->target.end_line) {
        throw Error(ErrorCode::kOverlappingEdits,
                    file + ": " + file_edits[i - 1]->target.name + " and " +
                        file_edits[i]->target.name + " overlap");
      }
    }
    const std::string pristine = tree.Read(file);
    std::string text = pristine;
    for (auto it = file_edits.rbegin(); it != file_edits.rend(); ++it) {
      text = ReplaceFunction(text, **it);
    }
    patch.diff += DiffFiles(file, pristine, text);
  }
  return patch;
}

PatchApplication ApplyDiff(const SourceTree &tree, std::string_view diff) {
  PatchApplication app;
  if (Trim(diff).empty()) return app;
  std::vector<FilePatch> files;
  try {
    files = ParseUnifiedDiff(diff);
  } catch (const Error &e) {
    app.check = {false, "malformed diff: " + e.detail(), "", -1};
    return app;
  }
  if (files.empty()) {
    app.check = {false, "no file sections in diff", "", -1};
    return app;
  }
  for (const auto &fp : files) {
    bool creates = fp.old_path == "/dev/null";
    bool deletes = fp.new_path == "/dev/null";
    std::string path = StripPath(creates ? fp.new_path : fp.old_path, 1);
    std::string original;
    if (auto it = app.files.find(path); it != app.files.end() && it->second) {
      original = *it->second;
    } else if (!creates) {
      if (!tree.Exists(path)) {
        app.check = {false, path + ": no such file", path, -1};
        return app;
      }
      original = tree.Read(path);
    }
    ApplyResult r = ApplyFilePatch(original, fp);
    if (!r.ok) {
      app.check = {false, path + ": " + r.error, path, r.failed_hunk};
      return app;
    }
    if (deletes) {
      app.files[path] = std::nullopt;
    } else {
      app.files[path] = std::move(r.text);
    }
  }
  return app;
}

ApplyCheck CheckApplies(const SourceTree &tree, std::string_view diff) {
  return ApplyDiff(tree, diff).check;
}

}  // namespace crashgym
