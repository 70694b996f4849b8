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

#ifndef CRASHGYM_SUBPROCESS_H_
#define CRASHGYM_SUBPROCESS_H_

#include <chrono>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace crashgym {

struct SubprocessOptions {
  std::optional<std::filesystem::path> cwd;
  std::chrono::milliseconds timeout{0};  // 0 = none
  // Receives merged stdout/stderr. Returning false kills the process group.
  std::function<bool(std::string_view)> on_output;
};

struct SubprocessResult {
  int exit_code = -1;       // -1 when killed or never started
  bool timed_out = false;
  bool stopped = false;     // on_output asked to stop
  std::string spawn_error;  // non-empty when exec failed
  bool ok() const { return exit_code == 0 && spawn_error.empty(); }
};

// Runs argv[0] (PATH lookup) in its own process group.
SubprocessResult RunSubprocess(const std::vector<std::string> &argv,
                               const SubprocessOptions &options = {});

// Runs and captures output; convenience for short commands.
SubprocessResult RunCapture(const std::vector<std::string> &argv,
                            std::string *output,
                            std::chrono::milliseconds timeout = std::chrono::minutes(5),
                            const std::optional<std::filesystem::path> &cwd = std::nullopt);

}  // namespace crashgym

#endif  // CRASHGYM_SUBPROCESS_H_
