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

#include "crashgym/crash_report.h"

#include <array>
#include <regex>

#include "crashgym/error.h"
#include "crashgym/util.h"

namespace crashgym {
namespace {

// "[  123.456789][ T1234] " console prefixes.
std::string_view StripConsolePrefix(std::string_view line) {
  static const std::regex kPrefix(R"(^(\[\s*\d+\.\d+\])?(\[\s*[TC]\d+\])?)");
  std::match_results<std::string_view::const_iterator> m;
  if (std::regex_search(line.begin(), line.end(), m, kPrefix) &&
      m.length(0) > 0) {
    return line.substr(m.length(0));
  }
  return line;
}

// Drops compiler clone suffixes: foo.constprop.0.cold -> foo.
std::string BaseSymbol(std::string_view symbol) {
  return std::string(symbol.substr(0, symbol.find('.')));
}

std::string SymbolFromLocation(std::string_view loc) {
  auto plus = loc.find('+');
  return BaseSymbol(loc.substr(0, plus));
}

bool IsSectionEnd(std::string_view line) {
  static constexpr std::array<std::string_view, 9> kMarkers = {
      "Allocated by task", "Freed by task",     "The buggy address",
      "Memory state",      "=================", "Kernel panic",
      "---[ end trace",    "Last potentially",  "Second to last"};
  for (auto m : kMarkers) {
    if (StartsWith(line, m)) return true;
  }
  return false;
}

bool IsStackNoise(std::string_view trimmed) {
  return trimmed == "<TASK>" || trimmed == "</TASK>" || trimmed == "<IRQ>" ||
         trimmed == "</IRQ>" || trimmed == "<NMI>" || trimmed == "</NMI>" ||
         StartsWith(trimmed, "? ");
}

// Collects frames starting at `lines[begin]` until the section ends.
std::vector<StackFrame> CollectFrames(const std::vector<std::string> &lines,
                                      size_t begin) {
  std::vector<StackFrame> frames;
  for (size_t i = begin; i < lines.size(); ++i) {
    std::string_view line = lines[i];
    std::string_view t = Trim(line);
    if (t.empty() || IsSectionEnd(t)) break;
    if (IsStackNoise(t)) continue;
    auto frame = ParseFrameLine(line);
    if (!frame) {
      if (frames.empty()) continue;  // e.g. "Call Trace:" continuation
      break;
    }
    frames.push_back(std::move(*frame));
  }
  return frames;
}

struct Header {
  size_t line_index;
  std::string title;
  Sanitizer sanitizer;
  std::optional<std::string> rip_function;
  // UBSAN names a source location; the title takes the first stack frame.
  std::optional<std::string> ubsan_kind;
};

std::optional<std::string> FindRipFunction(const std::vector<std::string> &lines,
                                           size_t from) {
  static const std::regex kRip(R"(RIP: [0-9a-fA-F]{4}:([A-Za-z0-9_.]+)\+)");
  for (size_t i = from; i < lines.size() && i < from + 40; ++i) {
    std::smatch m;
    if (std::regex_search(lines[i], m, kRip)) return BaseSymbol(m[1].str());
  }
  return std::nullopt;
}

std::optional<Header> FindHeader(const std::vector<std::string> &lines,
                                 bool mentions_kasan) {
  static const std::regex kKasan(R"(^BUG: KASAN: (.+?) in ([^\s]+))");
  static const std::regex kAccess(R"(^(Read|Write) of size)");
  static const std::regex kWarning(R"(^WARNING: .* at \S+ ([A-Za-z0-9_.]+)\+)");
  for (size_t i = 0; i < lines.size(); ++i) {
    std::string_view line = Trim(lines[i]);
    std::string s(line);
    std::smatch m;
    if (std::regex_search(s, m, kKasan)) {
      std::string kind = m[1].str();
      std::string func = SymbolFromLocation(m[2].str());
      std::string access;
      for (size_t j = i + 1; j < lines.size() && j <= i + 3; ++j) {
        std::smatch am;
        std::string next(Trim(lines[j]));
        if (std::regex_search(next, am, kAccess)) {
          access = am[1].str();
          break;
        }
      }
      std::string title = "KASAN: " + kind;
      if (!access.empty()) title += " " + access;
      title += " in " + func;
      return Header{i, title, Sanitizer::kKasan, std::nullopt, std::nullopt};
    }
    if (StartsWith(line, "general protection fault")) {
      auto rip = FindRipFunction(lines, i);
      std::string title = "general protection fault";
      if (rip) title += " in " + *rip;
      return Header{i, title,
                    mentions_kasan ? Sanitizer::kKasan : Sanitizer::kOther, rip, std::nullopt};
    }
    if (StartsWith(line, "BUG: kernel NULL pointer dereference")) {
      auto rip = FindRipFunction(lines, i);
      std::string title = "BUG: kernel NULL pointer dereference";
      if (rip) title += " in " + *rip;
      return Header{i, title,
                    mentions_kasan ? Sanitizer::kKasan : Sanitizer::kOther, rip, std::nullopt};
    }
    if (StartsWith(line, "BUG: unable to handle")) {
      auto rip = FindRipFunction(lines, i);
      std::string what(line.substr(std::string_view("BUG: ").size()));
      auto for_pos = what.find(" for address");
      if (for_pos != std::string::npos) what.resize(for_pos);
      std::string title = "BUG: " + what;
      if (rip) title += " in " + *rip;
      return Header{i, title, Sanitizer::kOther, rip, std::nullopt};
    }
    if (std::regex_search(s, m, kWarning)) {
      return Header{i, "WARNING in " + BaseSymbol(m[1].str()),
                    Sanitizer::kOther, FindRipFunction(lines, i),
                    std::nullopt};
    }
    if (StartsWith(line, "kernel BUG at ")) {
      auto rip = FindRipFunction(lines, i);
      return Header{i, rip ? "kernel BUG in " + *rip : std::string(line),
                    Sanitizer::kOther, rip, std::nullopt};
    }
    static const std::regex kUbsanAt(R"(^UBSAN: (\S+) in \S+:\d+(:\d+)?\s*$)");
    if (std::regex_search(s, m, kUbsanAt)) {
      return Header{i, std::string(line), Sanitizer::kOther, std::nullopt,
                    m[1].str()};
    }
    if (StartsWith(line, "BUG: ") || StartsWith(line, "UBSAN: ") ||
        StartsWith(line, "KMSAN: ") || StartsWith(line, "KCSAN: ")) {
      std::string title(line);
      // "... in foo+0x1/0x2" -> "... in foo"
      static const std::regex kOffset(R"(\+0x[0-9a-fA-F]+/0x[0-9a-fA-F]+)");
      title = std::regex_replace(title, kOffset, "");
      return Header{i, title, Sanitizer::kOther, std::nullopt, std::nullopt};
    }
  }
  return std::nullopt;
}

size_t FindLine(const std::vector<std::string> &lines, size_t from,
                std::string_view prefix) {
  for (size_t i = from; i < lines.size(); ++i) {
    if (StartsWith(Trim(lines[i]), prefix)) return i;
  }
  return lines.size();
}

}  // namespace

std::optional<StackFrame> ParseFrameLine(std::string_view line) {
  static const std::regex kFrame(
      R"(^\s+(?:\[<[0-9a-fA-F]+>\]\s+)?([A-Za-z_][A-Za-z0-9_.]*)(\+0x[0-9a-fA-F]+/0x[0-9a-fA-F]+)?(?:\s+\[[A-Za-z0-9_]+\])?(?:\s+([^\s:]+):(\d+))?(\s+\[inline\])?\s*$)");
  std::string s(StripConsolePrefix(line));
  std::smatch m;
  if (!std::regex_match(s, m, kFrame)) return std::nullopt;
  if (!m[2].matched && !m[3].matched) return std::nullopt;
  StackFrame frame;
  frame.function = BaseSymbol(m[1].str());
  if (m[2].matched) frame.offset = m[2].str();
  if (m[3].matched) {
    frame.file = m[3].str();
    frame.line = std::stoi(m[4].str());
  }
  frame.inlined = m[5].matched;
  return frame;
}

bool IsSanitizerFrame(std::string_view function) {
  static constexpr std::array<std::string_view, 21> kPrefixes = {
      "kasan_",       "__kasan_",   "____kasan_",
      "__asan_",      "asan_",      "dump_stack",
      "__dump_stack", "show_stack", "print_address_description",
      "print_report", "check_memory_region", "check_region_inline",
      "save_stack",   "set_track",  "__ubsan_",
      "ubsan_",       "instrument_", "kmsan_",
      "__msan_",      "atomic_",    "arch_atomic"};
  for (auto p : kPrefixes) {
    if (StartsWith(function, p)) return true;
  }
  return false;
}

CrashReport ParseReport(std::string_view text) {
  std::vector<std::string> lines;
  for (auto l : SplitLines(text)) {
    std::string_view stripped = StripConsolePrefix(l);
    if (!stripped.empty() && stripped.back() == '\r') stripped.remove_suffix(1);
    lines.emplace_back(stripped);
  }
  auto header = FindHeader(lines, Contains(text, "KASAN"));
  if (!header) {
    throw Error(ErrorCode::kNoSanitizerHeader, "no crash header found");
  }

  CrashReport report;
  report.raw = std::string(text);
  report.title = header->title;
  report.sanitizer = header->sanitizer;

  size_t trace = FindLine(lines, header->line_index, "Call Trace:");
  if (trace < lines.size()) report.access_stack = CollectFrames(lines, trace + 1);
  if (header->rip_function &&
      (report.access_stack.empty() ||
       report.access_stack.front().function != *header->rip_function)) {
    StackFrame rip;
    rip.function = *header->rip_function;
    report.access_stack.insert(report.access_stack.begin(), std::move(rip));
  }

  if (header->ubsan_kind) {
    for (const auto &f : report.access_stack) {
      if (IsSanitizerFrame(f.function)) continue;
      report.title = "UBSAN: " + *header->ubsan_kind + " in " + f.function;
      break;
    }
  }

  size_t alloc = FindLine(lines, header->line_index, "Allocated by task");
  if (alloc < lines.size()) report.alloc_stack = CollectFrames(lines, alloc + 1);
  size_t freed = FindLine(lines, header->line_index, "Freed by task");
  if (freed < lines.size()) report.free_stack = CollectFrames(lines, freed + 1);

  if (report.sanitizer == Sanitizer::kKasan && report.access_stack.empty()) {
    throw Error(ErrorCode::kEmptyAccessStack,
                "KASAN report without access stack: " + report.title);
  }
  return report;
}

std::string NormalizeTitle(std::string_view title) {
  static const std::regex kTimestamp(R"(\[\s*\d+\.\d+\])");
  static const std::regex kClock(R"(\b\d{1,2}:\d{2}:\d{2}(\.\d+)?\b)");
  static const std::regex kHexPrefixed(R"(0x[0-9a-fA-F]+)");
  static const std::regex kHexRun(R"(\b[0-9a-fA-F]{8,16}\b)");
  static const std::regex kTaskNumber(R"(\b(task|pid|PID:?|cpu|CPU:?)\s+\d+)");
  static const std::regex kSlashNumber(R"(/\d+\b)");
  static const std::regex kSpaces(R"(\s+)");
  std::string s(title);
  s = std::regex_replace(s, kTimestamp, " ");
  s = std::regex_replace(s, kClock, " ");
  s = std::regex_replace(s, kHexPrefixed, "ADDR");
  s = std::regex_replace(s, kHexRun, "ADDR");
  s = std::regex_replace(s, kTaskNumber, "$1 NUM");
  s = std::regex_replace(s, kSlashNumber, "/NUM");
  s = std::regex_replace(s, kSpaces, " ");
  return std::string(Trim(s));
}

CrashSignature Signature(const CrashReport &report, int k) {
  CrashSignature sig;
  sig.normalized_title = NormalizeTitle(report.title);
  for (const auto &frame : report.access_stack) {
    if (static_cast<int>(sig.top_frames.size()) >= k) break;
    if (IsSanitizerFrame(frame.function)) continue;
    sig.top_frames.push_back(frame.function);
  }
  return sig;
}

bool SameCrash(const CrashSignature &a, const CrashSignature &b) {
  return a.normalized_title == b.normalized_title &&
         a.top_frames == b.top_frames;
}

}  // namespace crashgym
