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

#include "crashgym/toolchain.h"

#include <regex>
#include <sstream>

#include "crashgym/error.h"
#include "crashgym/util.h"

namespace crashgym {
namespace {

std::vector<long> VersionParts(std::string_view v) {
  std::vector<long> parts;
  size_t i = 0;
  while (i < v.size()) {
    if (v[i] < '0' || v[i] > '9') break;
    long n = 0;
    while (i < v.size() && v[i] >= '0' && v[i] <= '9') n = n * 10 + (v[i++] - '0');
    parts.push_back(n);
    if (i < v.size() && v[i] == '.') {
      ++i;
    } else {
      break;
    }
  }
  return parts;
}

}  // namespace

std::optional<CompilerId> ParseCompilerId(std::string_view text) {
  static const std::regex kCcText(R"re(CONFIG_CC_VERSION_TEXT="([^"]*)")re");
  static const std::regex kGcc(R"(\bgcc\b[^\n]*?\b(\d+)\.\d+(\.\d+)?)",
                               std::regex::icase);
  static const std::regex kClang(R"(\bclang version (\d+)\.\d+)");
  std::string hay(text);
  std::smatch m;
  if (std::regex_search(hay, m, kCcText)) hay = m[1].str();
  if (std::regex_search(hay, m, kClang)) {
    return CompilerId{"clang", std::stoi(m[1].str())};
  }
  if (std::regex_search(hay, m, kGcc)) {
    return CompilerId{"gcc", std::stoi(m[1].str())};
  }
  return std::nullopt;
}

std::optional<std::string> ParseConfigRelease(std::string_view config) {
  static const std::regex kHeader(R"(# Linux/\S+ (\d+\.\d+[^\s]*) Kernel Configuration)");
  std::string hay(config.substr(0, 4096));
  std::smatch m;
  if (std::regex_search(hay, m, kHeader)) return m[1].str();
  return std::nullopt;
}

int CompareVersions(std::string_view a, std::string_view b) {
  std::vector<long> pa = VersionParts(a), pb = VersionParts(b);
  size_t n = std::max(pa.size(), pb.size());
  for (size_t i = 0; i < n; ++i) {
    long x = i < pa.size() ? pa[i] : 0;
    long y = i < pb.size() ? pb[i] : 0;
    if (x != y) return x < y ? -1 : 1;
  }
  return 0;
}

ToolchainTable ToolchainTable::Parse(std::string_view text) {
  ToolchainTable table;
  int lineno = 0;
  for (auto raw : SplitLines(text)) {
    ++lineno;
    std::string_view line = Trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    std::istringstream in{std::string(line)};
    std::string kind, a, b, image, extra;
    in >> kind >> a >> b >> image;
    auto bad = [&](const std::string &why) {
      return Error(ErrorCode::kValidation,
                   "toolchain table line " + std::to_string(lineno) + ": " + why);
    };
    if (image.empty() || (in >> extra)) throw bad("expected 4 fields");
    if (kind == "compiler") {
      if (VersionParts(b).size() != 1) throw bad("bad major version " + b);
      table.compilers_.push_back({{a, std::stoi(b)}, image});
    } else if (kind == "release") {
      if (VersionParts(a).empty() || VersionParts(b).empty()) {
        throw bad("bad release range");
      }
      if (CompareVersions(a, b) >= 0) throw bad("empty release range");
      table.releases_.push_back({a, b, image});
    } else {
      throw bad("unknown rule kind " + kind);
    }
  }
  return table;
}

ToolchainTable ToolchainTable::Load(const std::filesystem::path &path) {
  return Parse(ReadFile(path));
}

std::optional<std::string> ToolchainTable::ForCompiler(const CompilerId &id) const {
  for (const auto &r : compilers_) {
    if (r.compiler == id) return r.image;
  }
  return std::nullopt;
}

std::optional<std::string> ToolchainTable::ForRelease(std::string_view release) const {
  if (VersionParts(release).empty()) return std::nullopt;
  for (const auto &r : releases_) {
    if (CompareVersions(r.min, release) <= 0 && CompareVersions(release, r.max) < 0) {
      return r.image;
    }
  }
  return std::nullopt;
}

std::string SelectToolchain(const ToolchainTable &table, std::string_view config,
                            std::string_view kernel_release) {
  std::optional<CompilerId> cc = ParseCompilerId(config);
  if (cc) {
    if (auto image = table.ForCompiler(*cc)) return *image;
  }
  if (auto image = table.ForRelease(kernel_release)) return *image;
  std::string detail = "no toolchain for ";
  detail += cc ? cc->name + "-" + std::to_string(cc->major) + " / " : "";
  detail += "release '" + std::string(kernel_release) + "'";
  throw Error(ErrorCode::kUnsupportedToolchain, detail);
}

}  // namespace crashgym
