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

#include "crashgym/gym_types.h"

#include "crashgym/error.h"

namespace crashgym {

std::string_view BuildOutcomeName(const BuildOutcome &outcome) {
  struct Namer {
    std::string_view operator()(const BuildSuccess &) { return "Success"; }
    std::string_view operator()(const BadPatch &) { return "BadPatch"; }
    std::string_view operator()(const CompileError &) { return "CompileError"; }
    std::string_view operator()(const BuildTimeout &) { return "Timeout"; }
    std::string_view operator()(const InfraError &) { return "InfraError"; }
  };
  return std::visit(Namer{}, outcome);
}

std::string_view ReproducerKindName(ReproducerKind kind) {
  return kind == ReproducerKind::kSyz ? "syz" : "C";
}

std::vector<const Reproducer *> AssignReproducers(const ReproJob &job) {
  std::vector<const Reproducer *> syz, c;
  for (const auto &r : job.reproducers) {
    (r.kind == ReproducerKind::kSyz ? syz : c).push_back(&r);
  }
  std::vector<const Reproducer *> out;
  if (job.reproducers.empty() || job.vm_count <= 0) return out;
  int syz_vms = syz.empty() ? 0 : c.empty() ? job.vm_count
                                            : (job.vm_count + 1) / 2;
  for (int i = 0; i < job.vm_count; ++i) {
    if (i < syz_vms) {
      out.push_back(syz[i % syz.size()]);
    } else {
      out.push_back(c[(i - syz_vms) % c.size()]);
    }
  }
  return out;
}

std::string_view VmStatusName(VmStatus status) {
  switch (status) {
    case VmStatus::kNoCrash: return "NoCrash";
    case VmStatus::kCrash: return "Crash";
    case VmStatus::kBootFail: return "BootFail";
    case VmStatus::kExecError: return "ExecError";
  }
  return "?";
}

std::string_view ReproClassName(ReproClass c) {
  switch (c) {
    case ReproClass::kPass: return "Pass";
    case ReproClass::kTriggered: return "Triggered";
    case ReproClass::kDifferentCrash: return "DifferentCrash";
    case ReproClass::kBootFail: return "BootFail";
    case ReproClass::kOther: return "Other";
  }
  return "?";
}

std::string_view JobKindName(JobKind kind) {
  return kind == JobKind::kBuild ? "build" : "repro";
}

std::string_view JobStateName(JobState state) {
  switch (state) {
    case JobState::kQueued: return "Queued";
    case JobState::kRunning: return "Running";
    case JobState::kDone: return "Done";
    case JobState::kFailed: return "Failed";
    case JobState::kTimedOut: return "TimedOut";
    case JobState::kCancelled: return "Cancelled";
  }
  return "?";
}

bool IsTerminal(JobState state) {
  return state != JobState::kQueued && state != JobState::kRunning;
}

int StateRank(JobState state) {
  switch (state) {
    case JobState::kQueued: return 0;
    case JobState::kRunning: return 1;
    default: return 2;
  }
}

BuildOutcome RunBuildOn(Gym &gym, const BuildJob &job) {
  Job done = gym.Wait(gym.SubmitBuild(job));
  if (const auto *outcome = std::get_if<BuildOutcome>(&done.result)) {
    return *outcome;
  }
  if (done.state == JobState::kTimedOut) return BuildTimeout{};
  return InfraError{"build job " + done.id + " ended " +
                    std::string(JobStateName(done.state)) + ": " + done.error};
}

ReproOutcome RunReproOn(Gym &gym, const ReproJob &job) {
  Job done = gym.Wait(gym.SubmitRepro(job));
  if (const auto *outcome = std::get_if<ReproOutcome>(&done.result)) {
    return *outcome;
  }
  ReproOutcome failed;
  failed.aggregate = ReproClass::kOther;
  return failed;
}

}  // namespace crashgym
