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

#include "crashgym/unified_diff.h"

#include <algorithm>
#include <regex>

#include "crashgym/error.h"
#include "crashgym/util.h"

namespace crashgym {
namespace {

struct Line {
  std::string_view text;
  bool eol = true;
  bool operator==(const Line &) const = default;
};

std::vector<Line> ToLines(std::string_view s) {
  std::vector<Line> out;
  for (auto l : SplitLinesKeepEnds(s)) {
    bool eol = !l.empty() && l.back() == '\n';
    if (eol) l.remove_suffix(1);
    out.push_back({l, eol});
  }
  return out;
}

enum class Op { kEqual, kDelete, kInsert };

// `a` / `b` are the positions in the old / new sequence when the edit is
// taken (for inserts `a` is the old line the insert precedes).
struct Edit {
  Op op;
  int a;
  int b;
};

// Myers' O((N+M)D) shortest edit script over [a_lo, a_hi) x [b_lo, b_hi).
void MyersDiff(const std::vector<Line> &a, int a_lo, int a_hi,
               const std::vector<Line> &b, int b_lo, int b_hi,
               std::vector<Edit> &out) {
  const int n = a_hi - a_lo;
  const int m = b_hi - b_lo;
  const int max = n + m;
  if (max == 0) return;
  // trace[d][k + d] is the furthest x on diagonal k after d edits.
  std::vector<std::vector<int>> trace;
  std::vector<int> prev;
  int final_d = -1;
  for (int d = 0; d <= max && final_d < 0; ++d) {
    std::vector<int> v(2 * d + 1, 0);
    for (int k = -d; k <= d; k += 2) {
      int x;
      auto at = [&](int kk) { return prev[kk + (d - 1)]; };
      if (d == 0) {
        x = 0;
      } else if (k == -d || (k != d && at(k - 1) < at(k + 1))) {
        x = at(k + 1);
      } else {
        x = at(k - 1) + 1;
      }
      int y = x - k;
      while (x < n && y < m && a[a_lo + x] == b[b_lo + y]) {
        ++x;
        ++y;
      }
      v[k + d] = x;
      if (x >= n && y >= m) {
        final_d = d;
        break;
      }
    }
    trace.push_back(v);
    prev = std::move(v);
  }

  std::vector<Edit> rev;
  int x = n, y = m;
  for (int d = final_d; d > 0; --d) {
    const std::vector<int> &vp = trace[d - 1];
    int k = x - y;
    auto at = [&](int kk) { return vp[kk + (d - 1)]; };
    int prev_k = (k == -d || (k != d && at(k - 1) < at(k + 1))) ? k + 1 : k - 1;
    int prev_x = at(prev_k);
    int prev_y = prev_x - prev_k;
    while (x > prev_x && y > prev_y) {
      --x;
      --y;
      rev.push_back({Op::kEqual, a_lo + x, b_lo + y});
    }
    if (x == prev_x) {
      --y;
      rev.push_back({Op::kInsert, a_lo + x, b_lo + y});
    } else {
      --x;
      rev.push_back({Op::kDelete, a_lo + x, b_lo + y});
    }
  }
  while (x > 0 && y > 0) {
    --x;
    --y;
    rev.push_back({Op::kEqual, a_lo + x, b_lo + y});
  }
  out.insert(out.end(), rev.rbegin(), rev.rend());
}

std::vector<Edit> DiffLines(const std::vector<Line> &a,
                            const std::vector<Line> &b) {
  int n = static_cast<int>(a.size());
  int m = static_cast<int>(b.size());
  int prefix = 0;
  while (prefix < n && prefix < m && a[prefix] == b[prefix]) ++prefix;
  int suffix = 0;
  while (suffix < n - prefix && suffix < m - prefix &&
         a[n - 1 - suffix] == b[m - 1 - suffix]) {
    ++suffix;
  }
  std::vector<Edit> edits;
  for (int i = 0; i < prefix; ++i) edits.push_back({Op::kEqual, i, i});
  MyersDiff(a, prefix, n - suffix, b, prefix, m - suffix, edits);
  for (int i = suffix; i > 0; --i) {
    edits.push_back({Op::kEqual, n - i, m - i});
  }
  return edits;
}

std::string RangeText(int start, int count) {
  if (count == 1) return std::to_string(start);
  return std::to_string(start) + "," + std::to_string(count);
}

std::string PathOrNull(std::string_view prefix, std::string_view path,
                       bool absent) {
  if (absent) return "/dev/null";
  return std::string(prefix) + std::string(path);
}

}  // namespace

std::string StripPath(std::string_view path, int strip) {
  if (path == "/dev/null") return std::string(path);
  for (int i = 0; i < strip; ++i) {
    auto slash = path.find('/');
    if (slash == std::string_view::npos) break;
    path.remove_prefix(slash + 1);
  }
  return std::string(path);
}

std::string FormatHunk(const Hunk &hunk) {
  std::string out = "@@ -" + RangeText(hunk.old_start, hunk.old_count) + " +" +
                    RangeText(hunk.new_start, hunk.new_count) + " @@";
  if (!hunk.section.empty()) out += " " + hunk.section;
  out += "\n";
  for (const auto &l : hunk.lines) {
    out += l.op;
    out += l.text;
    out += "\n";
    if (!l.eol) out += "\\ No newline at end of file\n";
  }
  return out;
}

std::string DiffFiles(std::string_view path, std::string_view old_text,
                      std::string_view new_text, int context) {
  if (old_text == new_text) return {};
  std::vector<Line> a = ToLines(old_text);
  std::vector<Line> b = ToLines(new_text);
  std::vector<Edit> edits = DiffLines(a, b);

  std::string body;
  const size_t ctx = static_cast<size_t>(std::max(context, 0));
  size_t i = 0;
  size_t prev_end = 0;
  while (i < edits.size()) {
    if (edits[i].op == Op::kEqual) {
      ++i;
      continue;
    }
    size_t start = i;
    size_t end = i;
    for (;;) {
      while (end < edits.size() && edits[end].op != Op::kEqual) ++end;
      size_t j = end;
      while (j < edits.size() && edits[j].op == Op::kEqual) ++j;
      if (j < edits.size() && j - end <= 2 * ctx) {
        end = j;
        continue;
      }
      break;
    }
    size_t hs = start >= ctx ? std::max(start - ctx, prev_end) : prev_end;
    size_t he = std::min(end + ctx, edits.size());

    Hunk hunk;
    for (size_t e = hs; e < he; ++e) {
      const Edit &ed = edits[e];
      switch (ed.op) {
        case Op::kEqual:
          hunk.lines.push_back({' ', std::string(a[ed.a].text), a[ed.a].eol});
          ++hunk.old_count;
          ++hunk.new_count;
          break;
        case Op::kDelete:
          hunk.lines.push_back({'-', std::string(a[ed.a].text), a[ed.a].eol});
          ++hunk.old_count;
          break;
        case Op::kInsert:
          hunk.lines.push_back({'+', std::string(b[ed.b].text), b[ed.b].eol});
          ++hunk.new_count;
          break;
      }
    }
    hunk.old_start = edits[hs].a + (hunk.old_count > 0 ? 1 : 0);
    hunk.new_start = edits[hs].b + (hunk.new_count > 0 ? 1 : 0);
    body += FormatHunk(hunk);
    prev_end = he;
    i = he;
  }

  std::string out = "diff --git a/" + std::string(path) + " b/" +
                    std::string(path) + "\n";
  out += "--- " + PathOrNull("a/", path, old_text.empty()) + "\n";
  out += "+++ " + PathOrNull("b/", path, new_text.empty()) + "\n";
  return out + body;
}

std::vector<FilePatch> ParseUnifiedDiff(std::string_view diff) {
  static const std::regex kHunkHeader(
      R"(^@@ -(\d+)(?:,(\d+))? \+(\d+)(?:,(\d+))? @@(.*)$)");
  std::vector<FilePatch> files;
  std::vector<std::string_view> lines = SplitLines(diff);
  Hunk *hunk = nullptr;
  int old_left = 0, new_left = 0;
  auto header_path = [](std::string_view rest) {
    auto tab = rest.find('\t');
    return std::string(Trim(rest.substr(0, tab)));
  };

  for (size_t i = 0; i < lines.size(); ++i) {
    std::string_view line = lines[i];
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (hunk && (old_left > 0 || new_left > 0)) {
      char op = line.empty() ? ' ' : line.front();
      std::string_view text = line.empty() ? line : line.substr(1);
      if (op == '\\') {
        if (!hunk->lines.empty()) hunk->lines.back().eol = false;
        continue;
      }
      if (op == ' ' && old_left > 0 && new_left > 0) {
        --old_left;
        --new_left;
      } else if (op == '-' && old_left > 0) {
        --old_left;
      } else if (op == '+' && new_left > 0) {
        --new_left;
      } else {
        throw Error(ErrorCode::kMalformedDiff,
                    "line " + std::to_string(i + 1) +
                        ": hunk body does not match header counts");
      }
      hunk->lines.push_back({op, std::string(text), true});
      continue;
    }
    if (StartsWith(line, "\\")) {
      if (hunk && !hunk->lines.empty()) hunk->lines.back().eol = false;
      continue;
    }
    if (StartsWith(line, "--- ") && i + 1 < lines.size() &&
        StartsWith(lines[i + 1], "+++ ")) {
      FilePatch fp;
      fp.old_path = header_path(line.substr(4));
      fp.new_path = header_path(lines[i + 1].substr(4));
      files.push_back(std::move(fp));
      hunk = nullptr;
      ++i;
      continue;
    }
    if (StartsWith(line, "@@")) {
      if (files.empty()) {
        throw Error(ErrorCode::kMalformedDiff,
                    "line " + std::to_string(i + 1) +
                        ": hunk header before any file header");
      }
      std::match_results<std::string_view::const_iterator> m;
      if (!std::regex_match(line.begin(), line.end(), m, kHunkHeader)) {
        throw Error(ErrorCode::kMalformedDiff,
                    "line " + std::to_string(i + 1) + ": bad hunk header");
      }
      Hunk h;
      h.old_start = std::stoi(m[1].str());
      h.old_count = m[2].matched ? std::stoi(m[2].str()) : 1;
      h.new_start = std::stoi(m[3].str());
      h.new_count = m[4].matched ? std::stoi(m[4].str()) : 1;
      h.section = std::string(Trim(m[5].str()));
      files.back().hunks.push_back(std::move(h));
      hunk = &files.back().hunks.back();
      old_left = hunk->old_count;
      new_left = hunk->new_count;
      continue;
    }
    // Anything else ends the current hunk (git headers, commit text).
    hunk = nullptr;
  }
  if (hunk && (old_left > 0 || new_left > 0)) {
    throw Error(ErrorCode::kMalformedDiff, "truncated hunk at end of diff");
  }
  return files;
}

ApplyResult ApplyFilePatch(std::string_view original, const FilePatch &patch) {
  std::vector<Line> orig = ToLines(original);
  std::vector<Line> out;
  ApplyResult result;
  size_t cursor = 0;
  for (size_t h = 0; h < patch.hunks.size(); ++h) {
    const Hunk &hunk = patch.hunks[h];
    std::vector<Line> old_lines, new_lines;
    for (const auto &l : hunk.lines) {
      if (l.op != '+') old_lines.push_back({l.text, l.eol});
      if (l.op != '-') new_lines.push_back({l.text, l.eol});
    }
    auto matches_at = [&](size_t pos) {
      if (pos < cursor || pos + old_lines.size() > orig.size()) return false;
      for (size_t k = 0; k < old_lines.size(); ++k) {
        if (!(orig[pos + k] == old_lines[k])) return false;
      }
      return true;
    };
    long expected = old_lines.empty() ? hunk.old_start : hunk.old_start - 1;
    std::optional<size_t> found;
    if (old_lines.empty()) {
      if (expected >= static_cast<long>(cursor) &&
          expected <= static_cast<long>(orig.size())) {
        found = static_cast<size_t>(expected);
      }
    } else {
      long span = static_cast<long>(orig.size());
      for (long dist = 0; dist <= span && !found; ++dist) {
        for (long pos : {expected + dist, expected - dist}) {
          if (pos >= 0 && matches_at(static_cast<size_t>(pos))) {
            found = static_cast<size_t>(pos);
            break;
          }
        }
      }
    }
    if (!found) {
      result.failed_hunk = static_cast<int>(h);
      result.error = "hunk #" + std::to_string(h + 1) + " at -" +
                     RangeText(hunk.old_start, hunk.old_count) +
                     " does not match";
      return result;
    }
    out.insert(out.end(), orig.begin() + static_cast<long>(cursor),
               orig.begin() + static_cast<long>(*found));
    out.insert(out.end(), new_lines.begin(), new_lines.end());
    cursor = *found + old_lines.size();
  }
  out.insert(out.end(), orig.begin() + static_cast<long>(cursor), orig.end());
  for (const auto &l : out) {
    result.text.append(l.text);
    if (l.eol) result.text += '\n';
  }
  result.ok = true;
  return result;
}

}  // namespace crashgym
