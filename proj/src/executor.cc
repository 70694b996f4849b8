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

#include "crashgym/executor.h"

#include <algorithm>
#include <atomic>
#include <thread>

#include "crashgym/error.h"
#include "crashgym/util.h"

namespace crashgym {

bool MatchesBaseline(std::string_view report, const CrashSignature &baseline) {
  try {
    return SameCrash(Signature(ParseReport(report)), baseline);
  } catch (const Error &) {
    return false;
  }
}

std::pair<ReproClass, bool> ClassifyRepro(
    const std::vector<VmResult> &per_vm,
    const std::optional<CrashSignature> &baseline) {
  int crashed = 0, boot_failed = 0, exec_errors = 0;
  bool triggered = false;
  for (const auto &vm : per_vm) {
    switch (vm.status) {
      case VmStatus::kCrash:
        ++crashed;
        if (!baseline || MatchesBaseline(vm.report, *baseline)) triggered = true;
        break;
      case VmStatus::kBootFail: ++boot_failed; break;
      case VmStatus::kExecError: ++exec_errors; break;
      case VmStatus::kNoCrash: break;
    }
  }
  int n = static_cast<int>(per_vm.size());
  bool nondet = crashed > 0 && crashed < n;
  if (triggered) return {ReproClass::kTriggered, nondet};
  if (crashed > 0) return {ReproClass::kDifferentCrash, nondet};
  if (n > 0 && boot_failed == n) return {ReproClass::kBootFail, false};
  if (boot_failed > 0 || exec_errors > 0) return {ReproClass::kOther, false};
  return {ReproClass::kPass, false};
}

void ValidateBuildJob(const BuildJob &job) {
  if (job.timeout_sec <= 0) {
    throw Error(ErrorCode::kValidation, "build timeout must be positive");
  }
  if (job.cores < 1) throw Error(ErrorCode::kValidation, "cores must be >= 1");
  if (job.commit.empty()) throw Error(ErrorCode::kValidation, "commit is required");
}

void ValidateReproJob(const ReproJob &job) {
  if (job.timeout_sec <= 0) {
    throw Error(ErrorCode::kValidation, "repro timeout must be positive");
  }
  if (job.vm_count < 1) throw Error(ErrorCode::kValidation, "vm_count must be >= 1");
  if (job.per_vm.cores < 1 || job.per_vm.ram_mb < 1) {
    throw Error(ErrorCode::kValidation, "per-VM cores and RAM must be positive");
  }
  if (job.reproducers.empty()) {
    throw Error(ErrorCode::kValidation, "at least one reproducer is required");
  }
  if (job.image.empty()) throw Error(ErrorCode::kValidation, "image is required");
}

BuildOutcome RunBuild(const BuildJob &job, const ToolchainTable &toolchains,
                      BuildExecutor &executor, const std::string &job_id,
                      const LogSink &log, const std::string &artifacts) {
  BuildWorkspace ctx;
  ctx.job_id = job_id;
  ctx.artifacts = artifacts;
  try {
    std::string release = ParseConfigRelease(job.config).value_or("");
    std::string request = job.compiler.empty() ? job.config
                                               : job.compiler + "\n" + job.config;
    ctx.toolchain = SelectToolchain(toolchains, request, release);
    log("toolchain: " + ctx.toolchain + "\n");
  } catch (const Error &e) {
    log(std::string("toolchain: ") + e.what() + "\n");
    return InfraError{e.what()};
  }

  struct Cleanup {
    BuildExecutor &ex;
    BuildWorkspace &ctx;
    ~Cleanup() { ex.Release(ctx); }
  } cleanup{executor, ctx};

  auto infra = [&](const StepResult &r, std::string_view step) -> BuildOutcome {
    return InfraError{std::string(step) + ": " + r.detail};
  };
  try {
    StepResult prep = executor.Prepare(job, ctx, log);
    if (prep.status != StepResult::kOk) return infra(prep, "prepare");

    if (!job.patch.empty()) {
      StepResult check = executor.CheckPatch(job, ctx, log);
      if (check.status == StepResult::kFailed) return BadPatch{check.detail};
      if (check.status != StepResult::kOk) return infra(check, "patch check");
    }

    std::string captured;
    LogSink tee = [&](std::string_view chunk) {
      captured.append(chunk);
      if (captured.size() > 64 * 1024) captured.erase(0, captured.size() - 32 * 1024);
      log(chunk);
    };
    StepResult compiled = executor.Compile(job, ctx, tee);
    switch (compiled.status) {
      case StepResult::kOk: return BuildSuccess{executor.Collect(job, ctx)};
      case StepResult::kTimeout: return BuildTimeout{};
      case StepResult::kFailed: {
        std::string text = captured.empty() ? compiled.detail : captured;
        return CompileError{"", std::string(Tail(text, 4000))};
      }
      case StepResult::kInfra: return infra(compiled, "compile");
    }
  } catch (const std::exception &e) {
    log(std::string("executor fault: ") + e.what() + "\n");
    return InfraError{e.what()};
  }
  return InfraError{"unreachable"};
}

ReproOutcome RunRepro(const ReproJob &job, ReproExecutor &executor,
                      const LogSink &log, int parallel_vms,
                      const VmSlots &slots) {
  std::vector<const Reproducer *> assigned = AssignReproducers(job);
  ReproOutcome out;
  out.per_vm.resize(job.vm_count);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < job.vm_count; i = next++) {
      if (slots.acquire) slots.acquire();
      VmResult r;
      try {
        r = executor.RunVm(job, i, *assigned[i], log);
      } catch (const std::exception &e) {
        r.status = VmStatus::kExecError;
        log("vm " + std::to_string(i) + ": " + e.what() + "\n");
      }
      if (slots.release) slots.release();
      r.vm_index = i;
      out.per_vm[i] = std::move(r);
    }
  };
  int threads = std::clamp(parallel_vms, 1, job.vm_count);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto &t : pool) t.join();
  }
  auto [aggregate, nondet] = ClassifyRepro(out.per_vm, job.baseline);
  out.aggregate = aggregate;
  out.nondet = nondet;
  return out;
}

}  // namespace crashgym
