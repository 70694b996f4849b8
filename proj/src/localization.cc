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

#include "crashgym/localization.h"

#include <algorithm>
#include <regex>
#include <set>

#include "crashgym/error.h"
#include "crashgym/unified_diff.h"
#include "crashgym/util.h"

namespace crashgym {
namespace {

std::string FunctionFromAnnotation(std::string_view annotation) {
  auto paren = annotation.find('(');
  if (paren == std::string_view::npos) return {};
  size_t end = paren;
  while (end > 0 && (annotation[end - 1] == ' ' || annotation[end - 1] == '\t')) {
    --end;
  }
  size_t begin = end;
  while (begin > 0 && IsIdentChar(annotation[begin - 1])) --begin;
  return std::string(annotation.substr(begin, end - begin));
}

// A diff split into whole hunks so it can be shortened hunk by hunk.
struct DiffBlocks {
  std::string preamble;
  struct Section {
    std::string header;
    std::vector<std::string> hunks;
  };
  std::vector<Section> sections;

  static DiffBlocks Split(std::string_view diff) {
    DiffBlocks blocks;
    std::vector<std::string_view> lines = SplitLinesKeepEnds(diff);
    bool in_hunk = false;
    for (size_t i = 0; i < lines.size(); ++i) {
      std::string_view line = lines[i];
      bool file_start =
          StartsWith(line, "diff --git ") ||
          (StartsWith(line, "--- ") && i + 1 < lines.size() &&
           StartsWith(lines[i + 1], "+++ ") &&
           (blocks.sections.empty() || in_hunk ||
            blocks.sections.back().hunks.size() > 0));
      if (file_start) {
        blocks.sections.push_back({});
        in_hunk = false;
      }
      if (StartsWith(line, "@@") && !blocks.sections.empty()) {
        blocks.sections.back().hunks.emplace_back();
        in_hunk = true;
      }
      if (blocks.sections.empty()) {
        blocks.preamble.append(line);
      } else if (in_hunk) {
        blocks.sections.back().hunks.back().append(line);
      } else {
        blocks.sections.back().header.append(line);
      }
    }
    return blocks;
  }

  size_t hunk_count() const {
    size_t n = 0;
    for (const auto &s : sections) n += s.hunks.size();
    return n;
  }

  void DropLastHunk() {
    while (!sections.empty() && sections.back().hunks.empty()) {
      sections.pop_back();
    }
    if (sections.empty()) return;
    sections.back().hunks.pop_back();
    if (sections.back().hunks.empty()) sections.pop_back();
  }

  std::string Join() const {
    std::string out = preamble;
    for (const auto &s : sections) {
      out += s.header;
      for (const auto &h : s.hunks) out += h;
    }
    return out;
  }
};

std::string RenderUncapped(const LocalizationContext &ctx) {
  std::string out;
  if (!ctx.report_excerpt.empty()) {
    out += kCrashReportHeader;
    out += "\n";
    out += ctx.report_excerpt;
    out += "\n\n";
  }
  out += kStackCandidatesHeader;
  out += "\n";
  for (size_t i = 0; i < ctx.stack_candidates.size(); ++i) {
    const auto &c = ctx.stack_candidates[i];
    out += std::to_string(i + 1) + ". " + c.function;
    if (c.file) out += " (" + *c.file + ")";
    out += "\n";
  }
  if (ctx.bic_diff) {
    out += "\n";
    out += kBicHeader;
    out += "\n";
    if (!ctx.bic_functions.empty()) {
      out += "Touched functions:\n";
      for (const auto &t : ctx.bic_functions) {
        out += "- " + t.file + ": " +
               (t.function.empty() ? std::string("(unnamed hunk)") : t.function) +
               "\n";
      }
      out += "\n";
    }
    out += *ctx.bic_diff;
    if (!ctx.bic_diff->empty() && ctx.bic_diff->back() != '\n') out += "\n";
  }
  return out;
}

}  // namespace

std::vector<TouchedFunction> TouchedFunctions(std::string_view diff) {
  static const std::regex kHunk(
      R"(^@@ -\d+(?:,\d+)? \+\d+(?:,\d+)? @@ ?(.*)$)");
  std::vector<TouchedFunction> out;
  std::set<std::pair<std::string, std::string>> seen;
  std::optional<std::string> file;
  std::string old_path;
  std::vector<std::string_view> lines = SplitLines(diff);
  for (size_t i = 0; i < lines.size(); ++i) {
    std::string_view line = lines[i];
    if (StartsWith(line, "--- ") && i + 1 < lines.size() &&
        StartsWith(lines[i + 1], "+++ ")) {
      auto path_of = [](std::string_view rest) {
        return std::string(Trim(rest.substr(0, rest.find('\t'))));
      };
      std::string old_p = path_of(line.substr(4));
      std::string new_p = path_of(lines[i + 1].substr(4));
      file = StripPath(new_p == "/dev/null" ? old_p : new_p, 1);
      ++i;
      continue;
    }
    if (!StartsWith(line, "@@")) continue;
    if (!file) {
      throw Error(ErrorCode::kMalformedDiff,
                  "hunk header before any file header at line " +
                      std::to_string(i + 1));
    }
    std::string s(line);
    std::smatch m;
    if (!std::regex_match(s, m, kHunk)) {
      throw Error(ErrorCode::kMalformedDiff,
                  "bad hunk header at line " + std::to_string(i + 1));
    }
    std::string function = FunctionFromAnnotation(m[1].str());
    if (seen.insert({*file, function}).second) {
      out.push_back({*file, function});
    }
  }
  return out;
}

std::vector<StackCandidate> StackCandidates(const CrashReport &report, int k) {
  std::vector<StackCandidate> out;
  std::set<std::string, std::less<>> seen;
  auto take = [&](const std::vector<StackFrame> &frames) {
    for (const auto &f : frames) {
      if (static_cast<int>(out.size()) >= k) return;
      if (IsSanitizerFrame(f.function)) continue;
      if (!seen.insert(f.function).second) continue;
      out.push_back({f.function, f.file});
    }
  };
  take(report.access_stack);
  if (report.alloc_stack) take(*report.alloc_stack);
  if (report.free_stack) take(*report.free_stack);
  return out;
}

LocalizationContext BuildContext(const BugRecord &record,
                                 const CrashReport &report,
                                 const std::optional<std::string> &bic_diff,
                                 int budget, int k) {
  LocalizationContext ctx;
  ctx.bug_type = record.bug_type;
  ctx.char_budget = std::max(budget, 1);
  ctx.report_excerpt = std::string(Trim(report.raw));
  ctx.stack_candidates = StackCandidates(report, std::max(k, 1));
  if (ctx.stack_candidates.empty()) {
    ctx.stack_candidates.push_back({report.title, std::nullopt});
  }

  std::optional<DiffBlocks> blocks;
  if (bic_diff && !Trim(*bic_diff).empty()) {
    try {
      ctx.bic_functions = TouchedFunctions(*bic_diff);
    } catch (const Error &) {
      ctx.bic_functions.clear();
    }
    ctx.bic_diff = *bic_diff;
    blocks = DiffBlocks::Split(*bic_diff);
  }
  auto size = [&] { return static_cast<int>(RenderUncapped(ctx).size()); };

  while (ctx.bic_diff && size() > ctx.char_budget) {
    if (blocks->hunk_count() <= 1) {
      ctx.bic_diff.reset();
      ctx.bic_functions.clear();
      break;
    }
    blocks->DropLastHunk();
    ctx.bic_diff = blocks->Join();
  }
  if (size() > ctx.char_budget) {
    std::vector<std::string_view> lines = SplitLines(report.raw);
    // Largest line prefix of the report that fits.
    std::vector<std::string_view> kept;
    for (auto l : lines) kept.push_back(l);
    while (!kept.empty() && size() > ctx.char_budget) {
      kept.pop_back();
      std::vector<std::string> parts(kept.begin(), kept.end());
      ctx.report_excerpt = std::string(Trim(Join(parts, "\n")));
    }
  }
  while (ctx.stack_candidates.size() > 1 && size() > ctx.char_budget) {
    ctx.stack_candidates.pop_back();
  }
  return ctx;
}

std::string RenderContext(const LocalizationContext &ctx) {
  std::string out = RenderUncapped(ctx);
  if (static_cast<int>(out.size()) > ctx.char_budget) out.resize(ctx.char_budget);
  return out;
}

std::optional<std::string> FileHintFor(const LocalizationContext &ctx,
                                       std::string_view function) {
  for (const auto &c : ctx.stack_candidates) {
    if (c.function == function && c.file) return c.file;
  }
  for (const auto &t : ctx.bic_functions) {
    if (t.function == function) return t.file;
  }
  return std::nullopt;
}

}  // namespace crashgym
