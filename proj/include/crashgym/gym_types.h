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

#ifndef CRASHGYM_GYM_TYPES_H_
#define CRASHGYM_GYM_TYPES_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "crashgym/crash_report.h"

namespace crashgym {

using Metadata = std::map<std::string, std::string>;

inline constexpr int kDefaultBuildTimeoutSec = 3600;
inline constexpr int kDefaultReproTimeoutSec = 600;
inline constexpr int kDefaultVmCount = 26;
inline constexpr int kDefaultVmCores = 2;
inline constexpr int kDefaultVmRamMb = 2048;

struct BuildJob {
  std::string patch;  // unified diff, empty for baseline builds
  std::string commit;
  std::string source;  // repository locator
  std::string config;  // kernel .config text
  std::string compiler;  // toolchain request, e.g. the config's compiler line
  int cores = 1;
  int timeout_sec = kDefaultBuildTimeoutSec;
  Metadata metadata;
};

// Build results. Exactly one alternative is held.
struct BuildSuccess {
  std::string image;  // retrievable artifact reference
  bool operator==(const BuildSuccess &) const = default;
};
struct BadPatch {
  std::string detail;
  bool operator==(const BadPatch &) const = default;
};
struct CompileError {
  std::string log_ref;
  std::string log_excerpt;  // tail of the compiler output
  bool operator==(const CompileError &) const = default;
};
struct BuildTimeout {
  bool operator==(const BuildTimeout &) const = default;
};
struct InfraError {
  std::string detail;
  bool operator==(const InfraError &) const = default;
};
using BuildOutcome =
    std::variant<BuildSuccess, BadPatch, CompileError, BuildTimeout, InfraError>;

// "Success", "BadPatch", "CompileError", "Timeout", "InfraError".
std::string_view BuildOutcomeName(const BuildOutcome &outcome);
inline bool IsBuildSuccess(const BuildOutcome &o) {
  return std::holds_alternative<BuildSuccess>(o);
}

enum class ReproducerKind { kSyz, kC };
std::string_view ReproducerKindName(ReproducerKind kind);

struct Reproducer {
  ReproducerKind kind = ReproducerKind::kSyz;
  std::string text;
};

struct VmSpec {
  int cores = kDefaultVmCores;
  int ram_mb = kDefaultVmRamMb;
};

struct ReproJob {
  std::string image;
  std::vector<Reproducer> reproducers;
  int vm_count = kDefaultVmCount;
  VmSpec per_vm;
  int timeout_sec = kDefaultReproTimeoutSec;
  Metadata metadata;
  // Signature of the crash the reproducer is expected to trigger. Crashes
  // matching it classify as Triggered, others as DifferentCrash.
  std::optional<CrashSignature> baseline;
};

// Reproducer assigned to each VM: with both kinds present the first half of
// the VMs get syz programs and the rest C programs, else all VMs get the one
// kind. Within a kind programs are assigned round-robin.
std::vector<const Reproducer *> AssignReproducers(const ReproJob &job);

enum class VmStatus { kNoCrash, kCrash, kBootFail, kExecError };
std::string_view VmStatusName(VmStatus status);

struct VmResult {
  int vm_index = 0;
  VmStatus status = VmStatus::kNoCrash;
  std::string report;  // console crash text for kCrash
  bool operator==(const VmResult &) const = default;
};

enum class ReproClass { kPass, kTriggered, kDifferentCrash, kBootFail, kOther };
std::string_view ReproClassName(ReproClass c);

struct ReproOutcome {
  std::vector<VmResult> per_vm;
  ReproClass aggregate = ReproClass::kPass;
  bool nondet = false;
};

enum class JobKind { kBuild, kRepro };
enum class JobState { kQueued, kRunning, kDone, kFailed, kTimedOut, kCancelled };
std::string_view JobKindName(JobKind kind);
std::string_view JobStateName(JobState state);
bool IsTerminal(JobState state);
// Position along Queued -> Running -> terminal.
int StateRank(JobState state);

struct Job {
  std::string id;
  JobKind kind = JobKind::kBuild;
  JobState state = JobState::kQueued;
  int64_t submitted_ms = 0;
  std::optional<int64_t> started_ms;
  std::optional<int64_t> finished_ms;
  std::variant<std::monostate, BuildOutcome, ReproOutcome> result;
  std::string log_ref;
  std::string error;  // reason for kFailed / kCancelled
};

// Handle on a gym: anything that accepts jobs and reports their results.
class Gym {
 public:
  virtual ~Gym() = default;
  virtual std::string SubmitBuild(const BuildJob &job) = 0;
  virtual std::string SubmitRepro(const ReproJob &job) = 0;
  virtual Job Poll(const std::string &id) = 0;
  // Blocks until the job is terminal.
  virtual Job Wait(const std::string &id) = 0;
};

// Submit-and-wait helpers. Jobs that end without a classified result map to
// InfraError / BuildTimeout (build) or kOther (repro).
BuildOutcome RunBuildOn(Gym &gym, const BuildJob &job);
ReproOutcome RunReproOn(Gym &gym, const ReproJob &job);

}  // namespace crashgym

#endif  // CRASHGYM_GYM_TYPES_H_
