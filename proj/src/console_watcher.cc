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

#include "crashgym/console_watcher.h"

#include "crashgym/util.h"

namespace crashgym {
namespace {

// Console lines carry "[   12.345678][ T123] " style prefixes.
std::string_view StripPrefix(std::string_view line) {
  while (!line.empty() && line.front() == '[') {
    size_t close = line.find(']');
    if (close == std::string_view::npos) break;
    line.remove_prefix(close + 1);
    while (!line.empty() && line.front() == ' ') line.remove_prefix(1);
  }
  return line;
}

}  // namespace

ConsoleWatcher::ConsoleWatcher(std::string boot_marker, int max_report_lines)
    : boot_marker_(std::move(boot_marker)), max_report_lines_(max_report_lines) {}

bool ConsoleWatcher::IsCrashStart(std::string_view line) {
  std::string_view s = StripPrefix(line);
  static constexpr std::string_view kStarts[] = {
      "BUG: ",  "general protection fault", "kernel BUG at",
      "Kernel panic", "UBSAN: ", "WARNING: CPU:",
      "Unable to handle kernel", "Oops: ",
  };
  for (auto p : kStarts) {
    if (StartsWith(s, p)) return true;
  }
  return false;
}

bool ConsoleWatcher::IsCrashEnd(std::string_view line) {
  std::string_view s = StripPrefix(line);
  return StartsWith(s, "---[ end trace") || StartsWith(s, "Kernel Offset:") ||
         StartsWith(s, "---[ end Kernel panic") || StartsWith(s, "Rebooting in");
}

void ConsoleWatcher::Feed(std::string_view chunk) {
  partial_.append(chunk);
  size_t start = 0;
  for (size_t nl; (nl = partial_.find('\n', start)) != std::string::npos; start = nl + 1) {
    std::string_view line(partial_.data() + start, nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    Line(line);
  }
  partial_.erase(0, start);
  // A boot prompt has no trailing newline.
  if (!booted_ && Contains(partial_, boot_marker_)) {
    booted_ = true;
    if (state_ == State::kBooting) state_ = State::kRunning;
  }
}

void ConsoleWatcher::Finish() {
  if (!partial_.empty()) {
    std::string rest;
    rest.swap(partial_);
    Line(rest);
  }
}

void ConsoleWatcher::Line(std::string_view line) {
  if (state_ == State::kCrashed) {
    if (complete_) return;
    report_.append(line);
    report_.push_back('\n');
    if (IsCrashEnd(line) || ++report_lines_ >= max_report_lines_) complete_ = true;
    return;
  }
  if (IsCrashStart(line)) {
    state_ = State::kCrashed;
    report_.assign(line);
    report_.push_back('\n');
    report_lines_ = 1;
    return;
  }
  if (!booted_ && Contains(line, boot_marker_)) {
    booted_ = true;
    state_ = State::kRunning;
  }
}

}  // namespace crashgym
