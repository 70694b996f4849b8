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

#include "crashgym/evaluation.h"

#include <algorithm>
#include <numeric>

#include "crashgym/error.h"
#include "crashgym/util.h"

namespace crashgym {
namespace {

using i128 = __int128;

Fraction Make(int64_t num, int64_t den) {
  if (den < 0) {
    num = -num;
    den = -den;
  }
  int64_t g = std::gcd(num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
  return {num, den};
}

std::string I128ToString(i128 v) {
  if (v == 0) return "0";
  std::string s;
  bool neg = v < 0;
  if (neg) v = -v;
  while (v > 0) {
    s.push_back(static_cast<char>('0' + static_cast<int>(v % 10)));
    v /= 10;
  }
  if (neg) s.push_back('-');
  return {s.rbegin(), s.rend()};
}

int64_t Count(const std::map<std::string, int64_t> &m, const std::string &key) {
  auto it = m.find(key);
  return it == m.end() ? 0 : it->second;
}

std::string CsvField(const std::string &s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string MdRow(const std::vector<std::string> &cells) {
  return "| " + Join(cells, " | ") + " |\n";
}

std::string MdSeparator(size_t n) {
  std::vector<std::string> dashes(n, "---");
  return MdRow(dashes);
}

}  // namespace

bool operator<(const Fraction &a, const Fraction &b) {
  return static_cast<i128>(a.num) * b.den < static_cast<i128>(b.num) * a.den;
}

bool operator==(const Fraction &a, const Fraction &b) {
  return static_cast<i128>(a.num) * b.den == static_cast<i128>(b.num) * a.den;
}

std::string FormatScaled(int64_t num, int64_t den, int64_t scale, int decimals,
                         Rounding rounding) {
  i128 pow10 = 1;
  for (int i = 0; i < decimals; ++i) pow10 *= 10;
  i128 scaled = 0;
  if (den != 0) {
    i128 n = static_cast<i128>(num) * scale * pow10;
    i128 d = den;
    if (d < 0) {
      n = -n;
      d = -d;
    }
    bool neg = n < 0;
    if (neg) n = -n;
    scaled = rounding == Rounding::kHalfUp ? (2 * n + d) / (2 * d) : n / d;
    if (neg) scaled = -scaled;
  }
  bool neg = scaled < 0;
  if (neg) scaled = -scaled;
  std::string out = (neg ? "-" : "") + I128ToString(scaled / pow10);
  if (decimals > 0) {
    std::string frac = I128ToString(scaled % pow10);
    out += "." + std::string(decimals - frac.size(), '0') + frac;
  }
  return out;
}

std::string FormatPercent(const Fraction &f, Rounding rounding) {
  return FormatScaled(f.num, f.den, 100, 2, rounding);
}

std::string FormatRatio(const Fraction &f, Rounding rounding) {
  return FormatScaled(f.num, f.den, 1, 2, rounding);
}

std::string_view CorrectnessLabelName(CorrectnessLabel label) {
  switch (label) {
    case CorrectnessLabel::kPlausiblyCorrect: return "PlausiblyCorrect";
    case CorrectnessLabel::kHelpful: return "Helpful";
    case CorrectnessLabel::kWrong: return "Wrong";
    case CorrectnessLabel::kUnlabeled: return "Unlabeled";
  }
  return "Unlabeled";
}

CorrectnessLabel ParseCorrectnessLabel(std::string_view name) {
  for (auto l : {CorrectnessLabel::kPlausiblyCorrect, CorrectnessLabel::kHelpful,
                 CorrectnessLabel::kWrong, CorrectnessLabel::kUnlabeled}) {
    if (CorrectnessLabelName(l) == name) return l;
  }
  throw Error(ErrorCode::kValidation, "unknown correctness label " + std::string(name));
}

std::optional<int> BugResult::solved_at() const {
  for (const auto &a : attempts) {
    if (a.repro == ReproClass::kPass) return a.index;
  }
  return std::nullopt;
}

BugResult MakeBugResult(const std::string &bug_id, const std::string &setup,
                        const AgentConfig &config, const std::vector<AttemptLog> &logs,
                        const PriceTable *prices) {
  BugResult r;
  r.bug_id = bug_id;
  r.setup = setup;
  r.model = config.model;
  r.max_attempts = config.max_attempts;
  for (const auto &log : logs) {
    AttemptRecord a;
    a.index = log.attempt_index;
    if (log.build) a.build = std::string(BuildOutcomeName(*log.build));
    if (log.repro) {
      a.repro = log.repro->aggregate;
      a.nondet = log.repro->nondet;
    }
    a.agent_error = log.agent_error;
    a.usage = log.usage;
    r.usage += log.usage;
    if (log.passed()) r.solved = true;
    r.attempts.push_back(std::move(a));
  }
  if (prices && prices->Has(config.model)) r.cost = CostOf(r.usage, config.model, *prices);
  return r;
}

void ValidateResult(const BugResult &result) {
  bool any_pass = result.solved_at().has_value();
  if (any_pass != result.solved) {
    throw Error(ErrorCode::kValidation,
                result.bug_id + ": solved flag disagrees with attempt outcomes");
  }
  if (!result.solved && result.label != CorrectnessLabel::kUnlabeled) {
    throw Error(ErrorCode::kValidation,
                result.bug_id + ": correctness label on an unsolved bug");
  }
}

Json ToJson(const BugResult &r) {
  Json attempts = Json::array();
  for (const auto &a : r.attempts) {
    Json j = {{"index", a.index},
              {"build", a.build},
              {"repro", a.repro ? Json(ReproClassName(*a.repro)) : Json(nullptr)},
              {"nondet", a.nondet},
              {"prompt_tokens", a.usage.prompt_tokens},
              {"completion_tokens", a.usage.completion_tokens}};
    if (!a.agent_error.empty()) j["agent_error"] = a.agent_error;
    attempts.push_back(std::move(j));
  }
  Json j = {{"bug_id", r.bug_id},
            {"setup", r.setup},
            {"model", r.model},
            {"max_attempts", r.max_attempts},
            {"solved", r.solved},
            {"attempts", attempts},
            {"prompt_tokens", r.usage.prompt_tokens},
            {"completion_tokens", r.usage.completion_tokens},
            {"cost_usd", r.cost.ToString(12)},
            {"label", CorrectnessLabelName(r.label)}};
  if (!r.label_note.empty()) j["label_note"] = r.label_note;
  return j;
}

BugResult BugResultFromJson(const Json &j) {
  return WithJsonErrors([&] {
    BugResult r;
    r.bug_id = j.at("bug_id").get<std::string>();
    r.setup = j.at("setup").get<std::string>();
    r.model = j.at("model").get<std::string>();
    r.max_attempts = j.value("max_attempts", 1);
    r.solved = j.at("solved").get<bool>();
    for (const auto &a : j.at("attempts")) {
      AttemptRecord rec;
      rec.index = a.at("index").get<int>();
      rec.build = a.value("build", "");
      if (a.contains("repro") && !a["repro"].is_null()) {
        rec.repro = ParseReproClass(a["repro"].get<std::string>());
      }
      rec.nondet = a.value("nondet", false);
      rec.agent_error = a.value("agent_error", "");
      rec.usage = {a.value("prompt_tokens", int64_t{0}),
                   a.value("completion_tokens", int64_t{0})};
      r.attempts.push_back(std::move(rec));
    }
    r.usage = {j.value("prompt_tokens", int64_t{0}),
               j.value("completion_tokens", int64_t{0})};
    r.cost = Usd::Parse(j.value("cost_usd", "0"));
    r.label = ParseCorrectnessLabel(j.value("label", "Unlabeled"));
    r.label_note = j.value("label_note", "");
    ValidateResult(r);
    return r;
  });
}

std::vector<BugResult> LoadResults(const std::filesystem::path &path) {
  std::vector<BugResult> out;
  int lineno = 0;
  const std::string text = ReadFile(path);
  for (auto line : SplitLines(text)) {
    ++lineno;
    if (Trim(line).empty()) continue;
    try {
      out.push_back(BugResultFromJson(ParseJson(line)));
    } catch (const Error &e) {
      throw Error(e.code(), path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

Fraction EvaluationSummary::AvgCostFraction() const {
  return Make(total_cost.pico(), std::max<int64_t>(n_bugs, 1));
}

std::string EvaluationSummary::AvgCostPerBug() const {
  if (n_bugs == 0) return "0.00";
  // pico-dollars -> dollars
  return FormatScaled(total_cost.pico(), n_bugs * 1'000'000'000'000LL, 1, 2,
                      Rounding::kHalfUp);
}

EvaluationSummary Summarize(const std::vector<BugResult> &results) {
  EvaluationSummary s;
  if (!results.empty()) {
    s.setup = results.front().setup;
    s.model = results.front().model;
  }
  bool single_attempt = true;
  for (const auto &r : results) {
    if (r.setup != s.setup || r.model != s.model) {
      throw Error(ErrorCode::kMixedConfigs,
                  "results mix " + s.setup + "/" + s.model + " and " + r.setup +
                      "/" + r.model);
    }
    ++s.n_bugs;
    if (r.solved) ++s.solved;
    if (r.max_attempts > 1) single_attempt = false;
    s.total_cost += r.cost;
    s.usage += r.usage;
    if (auto k = r.solved_at()) ++s.attempt_histogram[*k];
    for (const auto &a : r.attempts) {
      ++s.attempts;
      if (!a.build.empty()) ++s.build_outcomes[a.build];
      if (a.build == "BadPatch") ++s.bad_patches;
      if (a.repro) ++s.repro_outcomes[std::string(ReproClassName(*a.repro))];
      if (a.nondet) ++s.nondet;
      if (!a.agent_error.empty()) ++s.agent_errors;
    }
  }
  s.pass_rate = {s.solved, s.n_bugs};
  s.bad_patch_per_attempt = !single_attempt;
  s.bad_patch_denominator = single_attempt ? s.n_bugs : s.attempts;
  s.bad_patch_rate = {s.bad_patches, s.bad_patch_denominator};
  return s;
}

ResultSet ToResultSet(const std::vector<BugResult> &results) {
  ResultSet set;
  if (!results.empty()) set.name = results.front().setup + "/" + results.front().model;
  for (const auto &r : results) {
    set.universe.insert(r.bug_id);
    if (r.solved) set.solved.insert(r.bug_id);
  }
  return set;
}

namespace {

void CheckUniverse(const std::vector<ResultSet> &sets) {
  for (const auto &s : sets) {
    if (s.universe != sets.front().universe) {
      throw Error(ErrorCode::kUniverseMismatch,
                  s.name + " covers a different bug set than " + sets.front().name);
    }
    if (!std::includes(s.universe.begin(), s.universe.end(), s.solved.begin(),
                       s.solved.end())) {
      throw Error(ErrorCode::kUniverseMismatch, s.name + " solves bugs outside its universe");
    }
  }
}

}  // namespace

Fraction CombinedPassRate(const std::vector<ResultSet> &sets) {
  if (sets.empty()) return {0, 0};
  CheckUniverse(sets);
  std::set<std::string> all;
  for (const auto &s : sets) all.insert(s.solved.begin(), s.solved.end());
  return {static_cast<int64_t>(all.size()),
          static_cast<int64_t>(sets.front().universe.size())};
}

std::vector<std::set<std::string>> UniqueSolves(const std::vector<ResultSet> &sets) {
  if (sets.empty()) return {};
  CheckUniverse(sets);
  std::map<std::string, int> solvers;
  for (const auto &s : sets) {
    for (const auto &id : s.solved) ++solvers[id];
  }
  std::vector<std::set<std::string>> out;
  for (const auto &s : sets) {
    std::set<std::string> unique;
    for (const auto &id : s.solved) {
      if (solvers[id] == 1) unique.insert(id);
    }
    out.push_back(std::move(unique));
  }
  return out;
}

std::map<int, int64_t> AttemptHistogram(const std::vector<BugResult> &results) {
  std::map<int, int64_t> h;
  for (const auto &r : results) {
    if (auto k = r.solved_at()) ++h[*k];
  }
  return h;
}

Fraction Reduction(int64_t before, int64_t after) {
  if (before == 0) {
    throw Error(ErrorCode::kDivisionByZeroBaseline, "reduction from a zero baseline");
  }
  return Make(before - after, before);
}

Fraction Ratio(const Fraction &a, const Fraction &b) {
  if (b.num == 0 || a.den == 0) {
    throw Error(ErrorCode::kDivisionByZeroBaseline, "ratio over a zero baseline");
  }
  i128 num = static_cast<i128>(a.num) * b.den;
  i128 den = static_cast<i128>(a.den) * b.num;
  i128 x = num < 0 ? -num : num, y = den;
  while (y != 0) {
    i128 t = x % y;
    x = y;
    y = t;
  }
  if (x > 1) {
    num /= x;
    den /= x;
  }
  // Beyond int64 the ratio is only approximate.
  while (num > INT64_MAX || den > INT64_MAX) {
    num /= 2;
    den /= 2;
  }
  return Make(static_cast<int64_t>(num), static_cast<int64_t>(den));
}

std::vector<Delta> DerivedDeltas(const std::vector<EvaluationSummary> &summaries) {
  if (summaries.size() < 2) {
    throw Error(ErrorCode::kValidation, "deltas need at least two summaries");
  }
  const EvaluationSummary &base = summaries.front();
  std::vector<Delta> out;
  for (size_t i = 1; i < summaries.size(); ++i) {
    const EvaluationSummary &s = summaries[i];
    std::string suffix = " (" + s.setup + "/" + s.model + " vs " + base.setup + "/" +
                         base.model + ")";
    Fraction red = Reduction(base.bad_patches, s.bad_patches);
    out.push_back({"bad_patch_reduction" + suffix, red,
                   FormatScaled(red.num, red.den, 100, 0, Rounding::kHalfUp) + "%"});
    Fraction cost = Ratio(s.AvgCostFraction(), base.AvgCostFraction());
    out.push_back({"cost_ratio" + suffix, cost, FormatRatio(cost) + "x"});
    Fraction pass = Ratio(s.pass_rate, base.pass_rate);
    out.push_back({"pass_rate_ratio" + suffix, pass, FormatRatio(pass) + "x"});
  }
  return out;
}

std::string EmitReport(const std::vector<EvaluationSummary> &summaries,
                       ReportFormat format) {
  auto bad_patch = [](const EvaluationSummary &s) {
    return FormatPercent(s.bad_patch_rate) + "% (" + std::to_string(s.bad_patches) +
           "/" + std::to_string(s.bad_patch_denominator) + ")";
  };
  auto trigger = [](const EvaluationSummary &s) {
    return Count(s.repro_outcomes, "Triggered") + Count(s.repro_outcomes, "DifferentCrash");
  };
  std::string out;
  if (format == ReportFormat::kCsv) {
    out = "setup,llm,n_bugs,pass,pass_rate,bad_patch,bad_patch_denominator,"
          "bad_patch_rate,avg_cost_per_bug,trigger,nondet,boot_fail,other,"
          "compilation_fails\n";
    for (const auto &s : summaries) {
      std::vector<std::string> f = {
          CsvField(s.setup),
          CsvField(s.model),
          std::to_string(s.n_bugs),
          std::to_string(s.solved),
          FormatPercent(s.pass_rate),
          std::to_string(s.bad_patches),
          std::to_string(s.bad_patch_denominator),
          FormatPercent(s.bad_patch_rate),
          s.AvgCostPerBug(),
          std::to_string(trigger(s)),
          std::to_string(s.nondet),
          std::to_string(Count(s.repro_outcomes, "BootFail")),
          std::to_string(Count(s.repro_outcomes, "Other")),
          std::to_string(Count(s.build_outcomes, "CompileError"))};
      out += Join(f, ",") + "\n";
    }
    return out;
  }

  out += "## Overall results\n\n";
  out += MdRow({"Setup", "LLM", "Pass Rate", "Bad Patch", "Avg $/Bug"});
  out += MdSeparator(5);
  for (const auto &s : summaries) {
    out += MdRow({s.setup, s.model, FormatPercent(s.pass_rate) + "%", bad_patch(s),
                  s.AvgCostPerBug()});
  }
  out += "\n## Reproducer job output\n\n";
  out += MdRow({"Setup", "LLM", "Pass", "Trigger", "Nondet", "Boot Fail", "Other"});
  out += MdSeparator(7);
  for (const auto &s : summaries) {
    out += MdRow({s.setup, s.model, std::to_string(Count(s.repro_outcomes, "Pass")),
                  std::to_string(trigger(s)), std::to_string(s.nondet),
                  std::to_string(Count(s.repro_outcomes, "BootFail")),
                  std::to_string(Count(s.repro_outcomes, "Other"))});
  }
  out += "\n## Build job output\n\n";
  out += MdRow({"Setup", "LLM", "Compilation Fails", "Bad Patch"});
  out += MdSeparator(4);
  for (const auto &s : summaries) {
    out += MdRow({s.setup, s.model,
                  std::to_string(Count(s.build_outcomes, "CompileError")),
                  std::to_string(s.bad_patches)});
  }
  return out;
}

std::string EmitSolveViews(const std::vector<ResultSet> &sets) {
  std::string out;
  if (sets.empty()) return out;
  Fraction combined = CombinedPassRate(sets);
  out += "Combined pass rate: " + std::to_string(combined.num) + "/" +
         std::to_string(combined.den) + " = " + FormatPercent(combined) + "%\n";
  std::vector<std::set<std::string>> unique = UniqueSolves(sets);
  out += "Unique solves:\n";
  for (size_t i = 0; i < sets.size(); ++i) {
    out += "  " + sets[i].name + ": " + std::to_string(unique[i].size()) + "\n";
  }
  return out;
}

}  // namespace crashgym
