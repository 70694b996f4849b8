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

#include "crashgym/sim_executor.h"

#include <chrono>
#include <sstream>
#include <thread>

#include "crashgym/error.h"
#include "crashgym/source_functions.h"
#include "crashgym/util.h"

namespace crashgym {
namespace {

constexpr std::string_view kImagePrefix = "sim-image/";

int ParseCount(std::string_view s, int lineno) {
  if (s == "all") return -1;
  if (s.empty() || !std::all_of(s.begin(), s.end(), ::isdigit)) {
    throw Error(ErrorCode::kValidation, "sim script line " +
                                            std::to_string(lineno) +
                                            ": bad count '" + std::string(s) + "'");
  }
  return std::stoi(std::string(s));
}

std::string BugOf(const Metadata &m) {
  auto it = m.find("bug_id");
  return it == m.end() ? "" : it->second;
}

void Sleep(int ms) {
  if (ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(ms));
}

}  // namespace

std::vector<SimRule> ParseSimScript(std::string_view text) {
  std::vector<SimRule> rules;
  int lineno = 0;
  for (auto raw : SplitLines(text)) {
    ++lineno;
    std::string_view line = Trim(raw);
    if (line.empty() || line.front() == '#') continue;
    auto fail = [&](const std::string &why) {
      return Error(ErrorCode::kValidation,
                   "sim script line " + std::to_string(lineno) + ": " + why);
    };
    SimRule rule;
    std::string_view rest = line;
    size_t diag = rest.find(" diag=");
    if (diag != std::string_view::npos) {
      rule.diag = std::string(rest.substr(diag + 6));
      rest = rest.substr(0, diag);
    }
    std::istringstream in{std::string(rest)};
    if (!(in >> rule.bug_id >> rule.patch)) throw fail("expected bug and patch");
    std::string token;
    while (in >> token) {
      size_t eq = token.find('=');
      if (eq == std::string::npos) throw fail("bad token " + token);
      std::string key = token.substr(0, eq), value = token.substr(eq + 1);
      if (key == "build") {
        static const std::vector<std::string> kBuilds = {
            "ok", "compile_error", "timeout", "infra", "bad_patch"};
        if (std::find(kBuilds.begin(), kBuilds.end(), value) == kBuilds.end()) {
          throw fail("unknown build outcome " + value);
        }
        rule.build = value;
      } else if (key == "repro") {
        if (value == "pass") continue;
        std::istringstream items(value);
        std::string item;
        while (std::getline(items, item, ',')) {
          size_t colon = item.find(':');
          if (colon == std::string::npos) throw fail("bad repro item " + item);
          std::string cls = item.substr(0, colon);
          SimRule::Slice slice;
          slice.count = ParseCount(std::string_view(item).substr(colon + 1), lineno);
          if (cls == "trigger") {
            slice.status = VmStatus::kCrash;
          } else if (cls == "different") {
            slice.status = VmStatus::kCrash;
            slice.matching = false;
          } else if (cls == "bootfail") {
            slice.status = VmStatus::kBootFail;
          } else if (cls == "execerror") {
            slice.status = VmStatus::kExecError;
          } else {
            throw fail("unknown repro class " + cls);
          }
          rule.repro.push_back(slice);
        }
      } else if (key == "delay_ms") {
        rule.delay_ms = ParseCount(value, lineno);
      } else if (key == "vm_delay_ms") {
        rule.vm_delay_ms = ParseCount(value, lineno);
      } else {
        throw fail("unknown key " + key);
      }
    }
    rules.push_back(std::move(rule));
  }
  return rules;
}

SimulatedExecutor::SimulatedExecutor(std::vector<SimRule> rules)
    : rules_(std::move(rules)) {}

SimulatedExecutor SimulatedExecutor::FromFile(const std::filesystem::path &path) {
  return SimulatedExecutor(ParseSimScript(ReadFile(path)));
}

void SimulatedExecutor::SetReport(const std::string &bug_id, std::string report) {
  std::lock_guard lock(mu_);
  reports_[bug_id] = std::move(report);
}

void SimulatedExecutor::SetTreeResolver(
    std::function<std::optional<std::filesystem::path>(const std::string &)> fn) {
  trees_ = std::move(fn);
}

std::string SimulatedExecutor::PatchKey(std::string_view patch) {
  return patch.empty() ? "baseline" : Sha256Hex(patch);
}

std::string SimulatedExecutor::UnrelatedCrashReport() {
  return "BUG: KASAN: use-after-free in sim_unrelated_release+0x41/0x90\n"
         "Read of size 8 at addr ffff88801d2c3e40 by task syz-executor.0/4711\n"
         "\n"
         "Call Trace:\n"
         " sim_unrelated_release+0x41/0x90\n"
         " sim_unrelated_close+0x22/0x60\n"
         " __x64_sys_close+0x1f/0x30\n"
         " do_syscall_64+0x3d/0xb0\n";
}

const SimRule *SimulatedExecutor::Find(const std::string &bug,
                                       const std::string &key) const {
  auto patch_matches = [&](const std::string &p) {
    if (p == key) return true;
    return key != "baseline" && p.size() >= 8 && StartsWith(key, p);
  };
  const SimRule *best = nullptr;
  int best_rank = -1;
  for (const auto &r : rules_) {
    bool bug_exact = r.bug_id == bug;
    bool patch_exact = r.patch != "*" && patch_matches(r.patch);
    if (!(bug_exact || r.bug_id == "*") || !(patch_exact || r.patch == "*")) {
      continue;
    }
    int rank = (bug_exact ? 2 : 0) + (patch_exact ? 1 : 0);
    if (rank > best_rank) {
      best = &r;
      best_rank = rank;
    }
  }
  return best;
}

void SimulatedExecutor::Record(std::string call) {
  std::lock_guard lock(mu_);
  calls_.push_back(std::move(call));
}

std::vector<std::string> SimulatedExecutor::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

StepResult SimulatedExecutor::Prepare(const BuildJob &job, BuildWorkspace &ctx,
                                      const LogSink &log) {
  std::string bug = BugOf(job.metadata);
  std::string key = PatchKey(job.patch);
  ctx.workdir = bug + "/" + key;
  Record("prepare " + bug + " " + key.substr(0, 12));
  log("sim: checkout " + job.commit + " for " + bug + "\n");
  if (!Find(bug, key)) {
    return StepResult::Infra("no script rule for " + bug + " " + key.substr(0, 12));
  }
  return StepResult::Ok();
}

StepResult SimulatedExecutor::CheckPatch(const BuildJob &job, BuildWorkspace &ctx,
                                         const LogSink &log) {
  std::string bug = BugOf(job.metadata);
  Record("check " + bug);
  if (trees_) {
    if (auto root = trees_(bug)) {
      ApplyCheck check = CheckApplies(SourceTree(*root), job.patch);
      if (!check.ok) {
        log("sim: patch does not apply: " + check.reason + "\n");
        return StepResult::Failed(check.reason);
      }
      return StepResult::Ok();
    }
  }
  const SimRule *rule = Find(bug, PatchKey(job.patch));
  (void)ctx;
  if (rule && rule->build == "bad_patch") {
    log("sim: patch does not apply\n");
    return StepResult::Failed("patch does not apply (scripted)");
  }
  return StepResult::Ok();
}

StepResult SimulatedExecutor::Compile(const BuildJob &job, BuildWorkspace &ctx,
                                      const LogSink &log) {
  std::string bug = BugOf(job.metadata);
  Record("compile " + bug);
  const SimRule *rule = Find(bug, PatchKey(job.patch));
  if (!rule) return StepResult::Infra("rule vanished for " + ctx.workdir);
  Sleep(rule->delay_ms);
  log("sim: make -j" + std::to_string(job.cores) + "\n");
  if (rule->build == "compile_error") {
    std::string diag = rule->diag.empty() ? "error: compilation failed" : rule->diag;
    log(diag + "\n");
    return StepResult::Failed(diag);
  }
  if (rule->build == "timeout") return StepResult::Timeout();
  if (rule->build == "infra") return StepResult::Infra("scripted infrastructure fault");
  return StepResult::Ok();
}

std::string SimulatedExecutor::Collect(const BuildJob &job, BuildWorkspace &ctx) {
  Record("collect " + BugOf(job.metadata));
  return std::string(kImagePrefix) + ctx.workdir;
}

VmResult SimulatedExecutor::RunVm(const ReproJob &job, int vm_index,
                                  const Reproducer &reproducer,
                                  const LogSink &log) {
  Record("vm " + std::to_string(vm_index) + " " + job.image);
  VmResult result;
  result.vm_index = vm_index;
  std::string_view image = job.image;
  if (!StartsWith(image, kImagePrefix)) {
    result.status = VmStatus::kBootFail;
    return result;
  }
  image.remove_prefix(kImagePrefix.size());
  size_t slash = image.rfind('/');
  std::string bug(image.substr(0, slash));
  std::string key(slash == std::string_view::npos ? "" : image.substr(slash + 1));
  const SimRule *rule = Find(bug, key);
  if (!rule) {
    result.status = VmStatus::kExecError;
    return result;
  }
  Sleep(rule->vm_delay_ms);

  int first = 0;
  for (const auto &slice : rule->repro) {
    int count = slice.count < 0 ? job.vm_count - first : slice.count;
    if (vm_index >= first && vm_index < first + count) {
      result.status = slice.status;
      if (slice.status == VmStatus::kCrash) {
        std::lock_guard lock(mu_);
        auto it = reports_.find(bug);
        result.report = slice.matching && it != reports_.end()
                            ? it->second
                            : UnrelatedCrashReport();
      }
      break;
    }
    first += count;
  }
  log("sim: vm " + std::to_string(vm_index) + " ran " +
      std::string(ReproducerKindName(reproducer.kind)) + " reproducer: " +
      std::string(VmStatusName(result.status)) + "\n");
  return result;
}

}  // namespace crashgym
