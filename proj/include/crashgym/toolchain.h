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

#ifndef CRASHGYM_TOOLCHAIN_H_
#define CRASHGYM_TOOLCHAIN_H_

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace crashgym {

struct CompilerId {
  std::string name;  // "gcc" or "clang"
  int major = 0;
  bool operator==(const CompilerId &) const = default;
};

// Finds a compiler identity such as "gcc (GCC) 9.3.0" or "Debian clang
// version 11.0.1" in `text`, preferring CONFIG_CC_VERSION_TEXT when the text
// is a kernel config.
std::optional<CompilerId> ParseCompilerId(std::string_view text);

// Kernel release from a config header ("# Linux/x86 5.4.0 Kernel
// Configuration"), if present.
std::optional<std::string> ParseConfigRelease(std::string_view config);

// Compares dotted numeric versions ("5.4.200" < "5.10"). Non-numeric
// suffixes ("-rc2", "+") are ignored.
int CompareVersions(std::string_view a, std::string_view b);

// Shipped mapping file, one rule per line:
//   compiler <name> <major> <image>
//   release <min> <max> <image>      (min <= release < max)
// Blank lines and '#' comments are skipped.
class ToolchainTable {
 public:
  struct CompilerRule {
    CompilerId compiler;
    std::string image;
  };
  struct ReleaseRule {
    std::string min;
    std::string max;
    std::string image;
  };

  static ToolchainTable Parse(std::string_view text);
  static ToolchainTable Load(const std::filesystem::path &path);

  const std::vector<CompilerRule> &compilers() const { return compilers_; }
  const std::vector<ReleaseRule> &releases() const { return releases_; }

  std::optional<std::string> ForCompiler(const CompilerId &id) const;
  std::optional<std::string> ForRelease(std::string_view release) const;

 private:
  std::vector<CompilerRule> compilers_;
  std::vector<ReleaseRule> releases_;
};

// Default table shipped with the library.
std::string_view BuiltinToolchainTable();

// Compiler identity found in `config` decides via the compiler rules; an
// absent or unmapped compiler falls back to the release rules. Throws
// Error(kUnsupportedToolchain) when nothing matches.
std::string SelectToolchain(const ToolchainTable &table,
                            std::string_view config,
                            std::string_view kernel_release);

}  // namespace crashgym

#endif  // CRASHGYM_TOOLCHAIN_H_
