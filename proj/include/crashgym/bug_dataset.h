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

#ifndef CRASHGYM_BUG_DATASET_H_
#define CRASHGYM_BUG_DATASET_H_

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "crashgym/gym_types.h"

namespace crashgym {

enum class BugType { kOob, kUaf, kNpd, kOther };

std::string_view BugTypeName(BugType type);  // "OOB", "UAF", "NPD", "Other"
std::optional<BugType> ParseBugType(std::string_view name);

// Maps a crash title to its bug class by substring, first match wins:
// out-of-bounds, then use-after-free / UAF, then null-ptr-deref /
// NULL pointer dereference.
BugType ClassifyBugType(std::string_view title);

struct CrashReport;
// Class of a parsed report: the title class, except that an untyped title
// whose body carries the KASAN null-ptr-deref range hint counts as NPD.
BugType ClassifyReport(const CrashReport &report);

struct BugRecord {
  std::string bug_id;
  std::string title;
  BugType bug_type = BugType::kOther;
  std::string fix_commit;
  std::string parent_commit;
  std::optional<std::string> bic;
  std::string kernel_config;
  std::string compiler_hint;
  std::optional<std::string> repro_syz;
  std::optional<std::string> repro_c;
  std::string crash_report;
  std::optional<bool> nondeterministic;
  // Diff of the bug-inducing commit when the corpus ships one (bic.diff).
  std::optional<std::string> bic_diff;
};

struct Violation {
  std::string field;
  std::string message;
  bool missing = false;  // the field or its attachment is absent
};

// Every broken BugRecord invariant; empty when the record is well formed.
std::vector<Violation> Validate(const BugRecord &record);

struct LoadProblem {
  std::string bug_id;
  std::vector<Violation> violations;
};

struct DatasetScan {
  std::vector<BugRecord> records;  // well-formed, sorted by bug_id
  std::vector<LoadProblem> problems;  // malformed, sorted by bug_id
};

// Reads every `<root>/<bug_id>/` directory. Never throws for bad records;
// they are returned in `problems`. Throws Error(kUnreadablePath) when `root`
// is not a readable directory.
DatasetScan ScanDataset(const std::filesystem::path &root);

// Strict load: throws Error(kMissingField) naming the first malformed record
// (or Error(kValidation) for other invariant breaks).
std::vector<BugRecord> LoadDataset(const std::filesystem::path &root);

// Reads one bug directory; throws Error(kMissingField) for absent required
// fields and files.
BugRecord LoadBug(const std::filesystem::path &dir);

// Writes `record` in corpus layout under `root/<bug_id>/`.
void WriteBug(const std::filesystem::path &root, const BugRecord &record);

std::map<BugType, int> CountByType(const std::vector<BugRecord> &records);

// Reproducers of `record` in syz-then-C order.
std::vector<Reproducer> ReproducersOf(const BugRecord &record);

enum class BaselineStatus { kReproducible, kNotReproducible, kInfraFail };
std::string_view BaselineStatusName(BaselineStatus status);

struct BaselineVerdict {
  BaselineStatus status = BaselineStatus::kInfraFail;
  // Set when the baseline crashed in a strict subset of the VMs.
  bool nondeterministic = false;
  std::optional<BuildOutcome> build;
  std::optional<ReproOutcome> repro;
};

struct BaselineOptions {
  int build_cores = 1;
  int build_timeout_sec = kDefaultBuildTimeoutSec;
  int vm_count = kDefaultVmCount;
  int repro_timeout_sec = kDefaultReproTimeoutSec;
  std::string source = "linux";
};

// Builds the unpatched tree at parent_commit and runs its reproducers.
// Reproducible iff some VM crashed with the record's own crash signature.
BaselineVerdict VerifyBaseline(const BugRecord &record, Gym &gym,
                               const BaselineOptions &options = {});

// Pure aggregation step of VerifyBaseline.
BaselineVerdict ClassifyBaseline(const BuildOutcome &build,
                                 const std::optional<ReproOutcome> &repro);

}  // namespace crashgym

#endif  // CRASHGYM_BUG_DATASET_H_
