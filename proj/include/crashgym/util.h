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

#ifndef CRASHGYM_UTIL_H_
#define CRASHGYM_UTIL_H_

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace crashgym {

// Splits on '\n'. A trailing newline does not produce an empty last element.
std::vector<std::string_view> SplitLines(std::string_view text);

// Like SplitLines but every element keeps its '\n' terminator (the last one
// may lack it). Concatenating the result reproduces `text` exactly.
std::vector<std::string_view> SplitLinesKeepEnds(std::string_view text);

std::string_view Trim(std::string_view s);
bool StartsWith(std::string_view s, std::string_view prefix);
bool EndsWith(std::string_view s, std::string_view suffix);
bool Contains(std::string_view s, std::string_view needle);
std::string Join(const std::vector<std::string> &parts, std::string_view sep);
std::string ToLower(std::string_view s);
bool IsIdentChar(char c);

// Lower-case hex SHA-256.
std::string Sha256Hex(std::string_view data);

// True for a 40 character lower-case hex git object name.
bool IsGitHash(std::string_view s);

// Whole-file IO. Both throw Error(kIo / kUnreadablePath) on failure.
std::string ReadFile(const std::filesystem::path &path);
void WriteFile(const std::filesystem::path &path, std::string_view data);
// Write to a sibling temp file then rename over `path`.
void WriteFileAtomic(const std::filesystem::path &path, std::string_view data);
void AppendFile(const std::filesystem::path &path, std::string_view data);

// Last `max_chars` characters of `text` (all of it when shorter).
std::string_view Tail(std::string_view text, size_t max_chars);

}  // namespace crashgym

#endif  // CRASHGYM_UTIL_H_
