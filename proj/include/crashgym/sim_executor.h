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

#ifndef CRASHGYM_SIM_EXECUTOR_H_
#define CRASHGYM_SIM_EXECUTOR_H_

#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "crashgym/executor.h"

namespace crashgym {

// One scripted outcome. Script lines read
//
//   <bug_id|*> <baseline|*|patch-digest> [token ...]
//
// where the digest is the SHA-256 hex of the patch text (a prefix of at
// least 8 characters is enough) and `baseline` matches the empty patch.
// Tokens:
//   build=ok|compile_error|timeout|infra|bad_patch   (default ok)
//   repro=pass | <class>:<count>[,<class>:<count>...]
//       class: trigger, different, bootfail, execerror; count: N or all.
//       Listed classes fill the VMs in order, the rest see no crash.
//   delay_ms=N          sleep inside compile
//   vm_delay_ms=N       sleep inside every VM run
//   diag=<rest of line> compiler diagnostic for compile_error
// Exact bug and digest beat wildcards; the bug column is compared first.
struct SimRule {
  std::string bug_id;
  std::string patch;
  std::string build = "ok";
  struct Slice {
    VmStatus status = VmStatus::kNoCrash;
    bool matching = true;  // trigger vs different for crashes
    int count = 0;         // -1 = all remaining
  };
  std::vector<Slice> repro;
  int delay_ms = 0;
  int vm_delay_ms = 0;
  std::string diag;
};

std::vector<SimRule> ParseSimScript(std::string_view text);

// Build and repro executor driven by a script table. Bug ids come from the
// job metadata key "bug_id"; images are "sim-image/<bug>/<digest>" so repro
// jobs find their rule again. Every step is appended to a call log.
class SimulatedExecutor : public BuildExecutor, public ReproExecutor {
 public:
  explicit SimulatedExecutor(std::vector<SimRule> rules);
  static SimulatedExecutor FromFile(const std::filesystem::path &path);

  // Crash text emitted by VMs that trigger `bug_id`. Without one the
  // triggered crash is a synthetic report that never matches a baseline.
  void SetReport(const std::string &bug_id, std::string report);
  // When set, patch dry runs apply the diff to the returned tree instead of
  // consulting the script.
  void SetTreeResolver(
      std::function<std::optional<std::filesystem::path>(const std::string &)> fn);

  StepResult Prepare(const BuildJob &job, BuildWorkspace &ctx,
                     const LogSink &log) override;
  StepResult CheckPatch(const BuildJob &job, BuildWorkspace &ctx,
                        const LogSink &log) override;
  StepResult Compile(const BuildJob &job, BuildWorkspace &ctx,
                     const LogSink &log) override;
  std::string Collect(const BuildJob &job, BuildWorkspace &ctx) override;

  VmResult RunVm(const ReproJob &job, int vm_index, const Reproducer &reproducer,
                 const LogSink &log) override;

  std::vector<std::string> calls() const;

  // Digest key used in scripts for `patch`.
  static std::string PatchKey(std::string_view patch);
  // Report of a crash unrelated to any fixture bug.
  static std::string UnrelatedCrashReport();

 private:
  const SimRule *Find(const std::string &bug, const std::string &patch_key) const;
  void Record(std::string call);

  std::vector<SimRule> rules_;
  std::map<std::string, std::string> reports_;
  std::function<std::optional<std::filesystem::path>(const std::string &)> trees_;
  mutable std::mutex mu_;
  std::vector<std::string> calls_;
};

}  // namespace crashgym

#endif  // CRASHGYM_SIM_EXECUTOR_H_
