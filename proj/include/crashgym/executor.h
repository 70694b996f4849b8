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

#ifndef CRASHGYM_EXECUTOR_H_
#define CRASHGYM_EXECUTOR_H_

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "crashgym/crash_report.h"
#include "crashgym/gym_types.h"
#include "crashgym/toolchain.h"

namespace crashgym {

// Receives build and VM output as it is produced. Must be safe to call from
// several threads.
using LogSink = std::function<void(std::string_view)>;

struct StepResult {
  enum Status { kOk, kFailed, kTimeout, kInfra };
  Status status = kOk;
  std::string detail;

  static StepResult Ok() { return {}; }
  static StepResult Failed(std::string d) { return {kFailed, std::move(d)}; }
  static StepResult Timeout() { return {kTimeout, {}}; }
  static StepResult Infra(std::string d) { return {kInfra, std::move(d)}; }
};

// Per-build scratch state handed between the build steps.
struct BuildWorkspace {
  std::string job_id;
  std::string toolchain;  // image tag from SelectToolchain
  std::string workdir;    // executor-owned
  std::string artifacts;  // directory for collected outputs, may be empty
};

// prepare(tree, patch, config) -> compile(cores, timeout) -> collect.
class BuildExecutor {
 public:
  virtual ~BuildExecutor() = default;
  // Checks out job.commit and writes job.config.
  virtual StepResult Prepare(const BuildJob &job, BuildWorkspace &ctx,
                             const LogSink &log) = 0;
  // Dry run; kFailed means the patch does not apply.
  virtual StepResult CheckPatch(const BuildJob &job, BuildWorkspace &ctx,
                                const LogSink &log) = 0;
  // Applies the patch and compiles with job.cores under job.timeout_sec.
  virtual StepResult Compile(const BuildJob &job, BuildWorkspace &ctx,
                             const LogSink &log) = 0;
  // Image reference of a successful compile.
  virtual std::string Collect(const BuildJob &job, BuildWorkspace &ctx) = 0;
  // Workspace cleanup; always called.
  virtual void Release(BuildWorkspace &) {}
};

// boot(image, vm spec) -> inject(reproducer) -> watch(console, timeout).
// RunVm is called concurrently for different VMs of one job.
class ReproExecutor {
 public:
  virtual ~ReproExecutor() = default;
  virtual VmResult RunVm(const ReproJob &job, int vm_index,
                         const Reproducer &reproducer, const LogSink &log) = 0;
};

// Precedence: a crash matching `baseline` -> Triggered; any other crash ->
// DifferentCrash; every VM failed to boot -> BootFail; any remaining
// failure (exec error, partial boot failure) -> Other; else Pass. Without a
// baseline every crash counts as Triggered. nondet iff 0 < crashed < n.
std::pair<ReproClass, bool> ClassifyRepro(
    const std::vector<VmResult> &per_vm,
    const std::optional<CrashSignature> &baseline);

// Whether a console crash text carries `baseline`'s signature. Unparseable
// text never matches.
bool MatchesBaseline(std::string_view report, const CrashSignature &baseline);

// Validation shared by every submission path; throws Error(kValidation).
void ValidateBuildJob(const BuildJob &job);
void ValidateReproJob(const ReproJob &job);

// Toolchain selection, checkout, dry-run patch, compile. A patch failing
// the dry run yields BadPatch without the compiler being invoked. Never
// throws; infrastructure faults become InfraError.
BuildOutcome RunBuild(const BuildJob &job, const ToolchainTable &toolchains,
                      BuildExecutor &executor, const std::string &job_id,
                      const LogSink &log, const std::string &artifacts = "");

// Boots job.vm_count VMs (at most `parallel_vms` at a time), assigns
// reproducers by the split rule and classifies the results.
// `acquire`/`release` bracket each VM when given (core accounting).
struct VmSlots {
  std::function<void()> acquire;
  std::function<void()> release;
};
ReproOutcome RunRepro(const ReproJob &job, ReproExecutor &executor,
                      const LogSink &log, int parallel_vms = 1,
                      const VmSlots &slots = {});

}  // namespace crashgym

#endif  // CRASHGYM_EXECUTOR_H_
