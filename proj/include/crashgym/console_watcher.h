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

#ifndef CRASHGYM_CONSOLE_WATCHER_H_
#define CRASHGYM_CONSOLE_WATCHER_H_

#include <string>
#include <string_view>
#include <vector>

namespace crashgym {

// Line-oriented state machine over a VM serial console. Detects boot
// completion and the start and end of a kernel crash report.
class ConsoleWatcher {
 public:
  enum class State { kBooting, kRunning, kCrashed };

  explicit ConsoleWatcher(std::string boot_marker = "login:",
                          int max_report_lines = 400);

  // Accepts arbitrary chunks; partial lines are buffered.
  void Feed(std::string_view chunk);
  // Flushes a trailing partial line.
  void Finish();

  State state() const { return state_; }
  bool booted() const { return booted_; }
  // The crash text is complete (end-of-trace marker or line cap reached).
  bool report_complete() const { return complete_; }
  const std::string &report() const { return report_; }

  static bool IsCrashStart(std::string_view line);
  static bool IsCrashEnd(std::string_view line);

 private:
  void Line(std::string_view line);

  std::string boot_marker_;
  int max_report_lines_;
  State state_ = State::kBooting;
  bool booted_ = false;
  bool complete_ = false;
  int report_lines_ = 0;
  std::string partial_;
  std::string report_;
};

}  // namespace crashgym

#endif  // CRASHGYM_CONSOLE_WATCHER_H_
