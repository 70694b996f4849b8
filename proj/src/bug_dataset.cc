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

#include "crashgym/bug_dataset.h"

#include <algorithm>
#include <array>
#include <sstream>

#include "crashgym/crash_report.h"
#include "crashgym/error.h"
#include "crashgym/util.h"

namespace crashgym {
namespace {

namespace fs = std::filesystem;

constexpr std::array<std::string_view, 7> kManifestKeys = {
    "title",         "bug_type", "fix_commit",      "parent_commit",
    "bic",           "compiler_hint", "nondeterministic"};
constexpr std::array<std::string_view, 5> kRequiredKeys = {
    "title", "bug_type", "fix_commit", "parent_commit", "compiler_hint"};

struct Manifest {
  std::map<std::string, std::string> values;
  std::vector<Violation> violations;
};

Manifest ParseManifest(std::string_view text) {
  Manifest m;
  int lineno = 0;
  for (auto raw : SplitLines(text)) {
    ++lineno;
    auto line = Trim(raw);
    if (line.empty() || line.front() == '#') continue;
    auto colon = line.find(':');
    if (colon == std::string_view::npos) {
      m.violations.push_back(
          {"manifest", "line " + std::to_string(lineno) + ": expected key: value"});
      continue;
    }
    std::string key(Trim(line.substr(0, colon)));
    std::string value(Trim(line.substr(colon + 1)));
    if (std::find(kManifestKeys.begin(), kManifestKeys.end(), key) ==
        kManifestKeys.end()) {
      m.violations.push_back({key, "unknown manifest key"});
      continue;
    }
    m.values[key] = value;
  }
  return m;
}

std::optional<std::string> ReadOptional(const fs::path &p) {
  std::error_code ec;
  if (!fs::is_regular_file(p, ec)) return std::nullopt;
  return ReadFile(p);
}

// Reads a bug directory collecting missing-field violations instead of
// throwing. `record` is filled as far as possible.
std::vector<Violation> ReadBugDir(const fs::path &dir, BugRecord &record) {
  std::vector<Violation> missing;
  record.bug_id = dir.filename().string();
  auto manifest_text = ReadOptional(dir / "manifest");
  if (!manifest_text) {
    missing.push_back({"manifest", "missing manifest file", true});
    return missing;
  }
  Manifest manifest = ParseManifest(*manifest_text);
  for (auto key : kRequiredKeys) {
    if (!manifest.values.count(std::string(key))) {
      missing.push_back({std::string(key), "missing required field", true});
    }
  }
  auto get = [&](const char *key) -> std::string {
    auto it = manifest.values.find(key);
    return it == manifest.values.end() ? std::string() : it->second;
  };
  record.title = get("title");
  if (auto t = ParseBugType(get("bug_type"))) {
    record.bug_type = *t;
  } else if (manifest.values.count("bug_type")) {
    manifest.violations.push_back(
        {"bug_type", "unknown bug type '" + get("bug_type") + "'"});
  }
  record.fix_commit = get("fix_commit");
  record.parent_commit = get("parent_commit");
  if (manifest.values.count("bic") && !get("bic").empty()) record.bic = get("bic");
  record.compiler_hint = get("compiler_hint");
  if (manifest.values.count("nondeterministic")) {
    std::string v = ToLower(get("nondeterministic"));
    if (v == "true" || v == "yes" || v == "1") {
      record.nondeterministic = true;
    } else if (v == "false" || v == "no" || v == "0") {
      record.nondeterministic = false;
    } else {
      manifest.violations.push_back({"nondeterministic", "expected a boolean"});
    }
  }

  if (auto config = ReadOptional(dir / "config")) {
    record.kernel_config = *config;
  } else {
    missing.push_back({"kernel_config", "missing config file", true});
  }
  if (auto report = ReadOptional(dir / "report.txt")) {
    record.crash_report = *report;
  } else {
    missing.push_back({"crash_report", "missing report.txt", true});
  }
  record.repro_syz = ReadOptional(dir / "repro.syz");
  record.repro_c = ReadOptional(dir / "repro.c");
  if (!record.repro_syz && !record.repro_c) {
    missing.push_back({"repro", "neither repro.syz nor repro.c present", true});
  }
  record.bic_diff = ReadOptional(dir / "bic.diff");
  missing.insert(missing.end(), manifest.violations.begin(),
                 manifest.violations.end());
  return missing;
}

bool IsMissingField(const Violation &v) { return v.missing; }

}  // namespace

std::string_view BugTypeName(BugType type) {
  switch (type) {
    case BugType::kOob: return "OOB";
    case BugType::kUaf: return "UAF";
    case BugType::kNpd: return "NPD";
    case BugType::kOther: return "Other";
  }
  return "Other";
}

std::optional<BugType> ParseBugType(std::string_view name) {
  if (name == "OOB") return BugType::kOob;
  if (name == "UAF") return BugType::kUaf;
  if (name == "NPD") return BugType::kNpd;
  if (name == "Other") return BugType::kOther;
  return std::nullopt;
}

BugType ClassifyBugType(std::string_view title) {
  struct Rule {
    std::string_view needle;
    BugType type;
  };
  static constexpr std::array<Rule, 5> kRules = {{
      {"out-of-bounds", BugType::kOob},
      {"use-after-free", BugType::kUaf},
      {"UAF", BugType::kUaf},
      {"null-ptr-deref", BugType::kNpd},
      {"NULL pointer dereference", BugType::kNpd},
  }};
  for (const auto &rule : kRules) {
    if (Contains(title, rule.needle)) return rule.type;
  }
  return BugType::kOther;
}

BugType ClassifyReport(const CrashReport &report) {
  BugType type = ClassifyBugType(report.title);
  if (type == BugType::kOther && Contains(report.raw, "KASAN: null-ptr-deref")) {
    return BugType::kNpd;
  }
  return type;
}

std::vector<Violation> Validate(const BugRecord &record) {
  std::vector<Violation> out;
  if (record.bug_id.empty()) out.push_back({"bug_id", "empty bug id"});
  if (record.title.empty()) out.push_back({"title", "empty title"});
  if (!record.repro_syz && !record.repro_c) {
    out.push_back({"repro", "neither repro.syz nor repro.c present", true});
  }
  if (!IsGitHash(record.fix_commit)) {
    out.push_back({"fix_commit", "not a 40-hex commit hash"});
  }
  if (!IsGitHash(record.parent_commit)) {
    out.push_back({"parent_commit", "not a 40-hex commit hash"});
  }
  if (record.fix_commit == record.parent_commit) {
    out.push_back({"parent_commit", "parent_commit equals fix_commit"});
  }
  if (record.bic && !IsGitHash(*record.bic)) {
    out.push_back({"bic", "not a 40-hex commit hash"});
  }
  BugType classified = ClassifyBugType(record.title);
  if (classified != record.bug_type) {
    out.push_back({"bug_type", "bug_type " +
                                   std::string(BugTypeName(record.bug_type)) +
                                   " does not match title class " +
                                   std::string(BugTypeName(classified))});
  }
  if (record.crash_report.empty()) {
    out.push_back({"crash_report", "empty crash report"});
  } else {
    try {
      ParseReport(record.crash_report);
    } catch (const Error &e) {
      out.push_back({"crash_report", "unparseable: " + e.detail()});
    }
  }
  return out;
}

DatasetScan ScanDataset(const fs::path &root) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) {
    throw Error(ErrorCode::kUnreadablePath, root.string());
  }
  std::vector<fs::path> dirs;
  for (const auto &entry : fs::directory_iterator(root, ec)) {
    if (entry.is_directory()) dirs.push_back(entry.path());
  }
  if (ec) throw Error(ErrorCode::kUnreadablePath, root.string());
  std::sort(dirs.begin(), dirs.end());

  DatasetScan scan;
  for (const auto &dir : dirs) {
    BugRecord record;
    std::vector<Violation> violations = ReadBugDir(dir, record);
    if (violations.empty()) violations = Validate(record);
    if (violations.empty()) {
      scan.records.push_back(std::move(record));
    } else {
      scan.problems.push_back({record.bug_id, std::move(violations)});
    }
  }
  return scan;
}

std::vector<BugRecord> LoadDataset(const fs::path &root) {
  DatasetScan scan = ScanDataset(root);
  if (!scan.problems.empty()) {
    const LoadProblem &p = scan.problems.front();
    auto it = std::find_if(p.violations.begin(), p.violations.end(),
                           IsMissingField);
    const Violation &v = it != p.violations.end() ? *it : p.violations.front();
    throw Error(IsMissingField(v) ? ErrorCode::kMissingField
                                  : ErrorCode::kValidation,
                p.bug_id + ": " + v.field + ": " + v.message);
  }
  return std::move(scan.records);
}

BugRecord LoadBug(const fs::path &dir) {
  BugRecord record;
  auto violations = ReadBugDir(dir, record);
  for (const auto &v : violations) {
    if (IsMissingField(v)) {
      throw Error(ErrorCode::kMissingField,
                  record.bug_id + ": " + v.field + ": " + v.message);
    }
  }
  if (!violations.empty()) {
    throw Error(ErrorCode::kValidation, record.bug_id + ": " +
                                            violations.front().field + ": " +
                                            violations.front().message);
  }
  return record;
}

void WriteBug(const fs::path &root, const BugRecord &record) {
  fs::path dir = root / record.bug_id;
  std::ostringstream m;
  m << "title: " << record.title << "\n";
  m << "bug_type: " << BugTypeName(record.bug_type) << "\n";
  m << "fix_commit: " << record.fix_commit << "\n";
  m << "parent_commit: " << record.parent_commit << "\n";
  if (record.bic) m << "bic: " << *record.bic << "\n";
  m << "compiler_hint: " << record.compiler_hint << "\n";
  if (record.nondeterministic) {
    m << "nondeterministic: " << (*record.nondeterministic ? "true" : "false")
      << "\n";
  }
  WriteFile(dir / "manifest", m.str());
  WriteFile(dir / "config", record.kernel_config);
  WriteFile(dir / "report.txt", record.crash_report);
  if (record.repro_syz) WriteFile(dir / "repro.syz", *record.repro_syz);
  if (record.repro_c) WriteFile(dir / "repro.c", *record.repro_c);
  if (record.bic_diff) WriteFile(dir / "bic.diff", *record.bic_diff);
}

std::map<BugType, int> CountByType(const std::vector<BugRecord> &records) {
  std::map<BugType, int> counts;
  for (const auto &r : records) ++counts[r.bug_type];
  return counts;
}

std::vector<Reproducer> ReproducersOf(const BugRecord &record) {
  std::vector<Reproducer> out;
  if (record.repro_syz) out.push_back({ReproducerKind::kSyz, *record.repro_syz});
  if (record.repro_c) out.push_back({ReproducerKind::kC, *record.repro_c});
  return out;
}

std::string_view BaselineStatusName(BaselineStatus status) {
  switch (status) {
    case BaselineStatus::kReproducible: return "Reproducible";
    case BaselineStatus::kNotReproducible: return "NotReproducible";
    case BaselineStatus::kInfraFail: return "InfraFail";
  }
  return "?";
}

BaselineVerdict ClassifyBaseline(const BuildOutcome &build,
                                 const std::optional<ReproOutcome> &repro) {
  BaselineVerdict verdict;
  verdict.build = build;
  verdict.repro = repro;
  if (!IsBuildSuccess(build) || !repro) {
    verdict.status = BaselineStatus::kInfraFail;
    return verdict;
  }
  switch (repro->aggregate) {
    case ReproClass::kTriggered:
      verdict.status = BaselineStatus::kReproducible;
      verdict.nondeterministic = repro->nondet;
      break;
    case ReproClass::kPass:
    case ReproClass::kDifferentCrash:
      verdict.status = BaselineStatus::kNotReproducible;
      break;
    case ReproClass::kBootFail:
    case ReproClass::kOther:
      verdict.status = BaselineStatus::kInfraFail;
      break;
  }
  return verdict;
}

BaselineVerdict VerifyBaseline(const BugRecord &record, Gym &gym,
                               const BaselineOptions &options) {
  BuildJob build;
  build.commit = record.parent_commit;
  build.source = options.source;
  build.config = record.kernel_config;
  build.compiler = record.compiler_hint;
  build.cores = options.build_cores;
  build.timeout_sec = options.build_timeout_sec;
  build.metadata = {{"bug_id", record.bug_id}, {"purpose", "baseline"}};
  BuildOutcome built = RunBuildOn(gym, build);
  if (!IsBuildSuccess(built)) return ClassifyBaseline(built, std::nullopt);

  ReproJob repro;
  repro.image = std::get<BuildSuccess>(built).image;
  repro.reproducers = ReproducersOf(record);
  repro.vm_count = options.vm_count;
  repro.timeout_sec = options.repro_timeout_sec;
  repro.metadata = build.metadata;
  repro.baseline = Signature(ParseReport(record.crash_report));
  return ClassifyBaseline(built, RunReproOn(gym, repro));
}

}  // namespace crashgym
