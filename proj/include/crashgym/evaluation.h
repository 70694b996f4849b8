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

#ifndef CRASHGYM_EVALUATION_H_
#define CRASHGYM_EVALUATION_H_

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "crashgym/apr_agents.h"
#include "crashgym/json_io.h"
#include "crashgym/llm_gateway.h"

namespace crashgym {

// Exact non-negative rational.
struct Fraction {
  int64_t num = 0;
  int64_t den = 1;
  double value() const { return den == 0 ? 0.0 : static_cast<double>(num) / den; }
  // Cross-multiplied comparison.
  friend bool operator<(const Fraction &a, const Fraction &b);
  friend bool operator==(const Fraction &a, const Fraction &b);
};

enum class Rounding { kTruncate, kHalfUp };

// num/den * scale at `decimals` places. A zero denominator renders as zero.
std::string FormatScaled(int64_t num, int64_t den, int64_t scale, int decimals,
                         Rounding rounding);
// Percent at two decimals, truncated: 31/143 -> "21.67".
std::string FormatPercent(const Fraction &f, Rounding rounding = Rounding::kTruncate);
// Ratio at two decimals, half up: 17/8 -> "2.13".
std::string FormatRatio(const Fraction &f, Rounding rounding = Rounding::kHalfUp);

enum class CorrectnessLabel { kPlausiblyCorrect, kHelpful, kWrong, kUnlabeled };
std::string_view CorrectnessLabelName(CorrectnessLabel label);
CorrectnessLabel ParseCorrectnessLabel(std::string_view name);

struct AttemptRecord {
  int index = 1;
  std::string build;  // BuildOutcome name; empty when the agent failed
  std::optional<ReproClass> repro;
  bool nondet = false;
  std::string agent_error;
  Usage usage;
};

struct BugResult {
  std::string bug_id;
  std::string setup;
  std::string model;
  int max_attempts = 1;
  bool solved = false;
  std::vector<AttemptRecord> attempts;
  Usage usage;
  Usd cost;
  CorrectnessLabel label = CorrectnessLabel::kUnlabeled;
  std::string label_note;

  // Attempt index of the first Pass.
  std::optional<int> solved_at() const;
};

// Folds repair-loop logs into a result. Cost uses `prices` when it knows
// the model, else stays zero.
BugResult MakeBugResult(const std::string &bug_id, const std::string &setup,
                        const AgentConfig &config,
                        const std::vector<AttemptLog> &logs,
                        const PriceTable *prices);

// Throws Error(kValidation): solved must agree with the attempts and labels
// attach only to solved bugs.
void ValidateResult(const BugResult &result);

Json ToJson(const BugResult &result);
BugResult BugResultFromJson(const Json &j);

// Reads a JSON-lines result ledger.
std::vector<BugResult> LoadResults(const std::filesystem::path &path);

struct EvaluationSummary {
  std::string setup;
  std::string model;
  int64_t n_bugs = 0;
  int64_t solved = 0;
  Fraction pass_rate;
  int64_t attempts = 0;
  int64_t bad_patches = 0;
  // Bugs for single-attempt configs, attempts otherwise.
  int64_t bad_patch_denominator = 0;
  bool bad_patch_per_attempt = false;
  Fraction bad_patch_rate;
  Usd total_cost;
  Usage usage;
  // Outcome counts over attempts.
  std::map<std::string, int64_t> build_outcomes;
  std::map<std::string, int64_t> repro_outcomes;
  int64_t nondet = 0;
  int64_t agent_errors = 0;
  std::map<int, int64_t> attempt_histogram;

  // Average over all bugs, two decimals half up ("0.17").
  std::string AvgCostPerBug() const;
  Fraction AvgCostFraction() const;  // pico-dollars per bug
};

// Throws Error(kMixedConfigs) when setups or models differ.
EvaluationSummary Summarize(const std::vector<BugResult> &results);

// Solved ids of one configuration over its bug universe.
struct ResultSet {
  std::string name;
  std::set<std::string> universe;
  std::set<std::string> solved;
};
ResultSet ToResultSet(const std::vector<BugResult> &results);

// |union of solved| / n. Throws Error(kUniverseMismatch).
Fraction CombinedPassRate(const std::vector<ResultSet> &sets);
// Per set, the ids solved by no other set. Throws Error(kUniverseMismatch).
std::vector<std::set<std::string>> UniqueSolves(const std::vector<ResultSet> &sets);

// Bugs first solved at attempt k.
std::map<int, int64_t> AttemptHistogram(const std::vector<BugResult> &results);

struct Delta {
  std::string name;
  Fraction value;
  std::string display;  // "76%", "2.13x"
};

// 1 - after/before. Throws Error(kDivisionByZeroBaseline).
Fraction Reduction(int64_t before, int64_t after);
// a / b. Throws Error(kDivisionByZeroBaseline).
Fraction Ratio(const Fraction &a, const Fraction &b);

// Every later summary against the first: bad-patch reduction (integer
// percent), average-cost ratio and pass-rate ratio. Throws
// Error(kValidation) for fewer than two summaries.
std::vector<Delta> DerivedDeltas(const std::vector<EvaluationSummary> &summaries);

enum class ReportFormat { kMarkdown, kCsv };

// Overall, reproducer-job and build-job tables. Byte-deterministic.
std::string EmitReport(const std::vector<EvaluationSummary> &summaries,
                       ReportFormat format);

// Combined pass rate and unique-solve lines for several configurations.
std::string EmitSolveViews(const std::vector<ResultSet> &sets);

}  // namespace crashgym

#endif  // CRASHGYM_EVALUATION_H_
