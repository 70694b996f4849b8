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

#include <gtest/gtest.h>

#include <atomic>

#include "crashgym/console_watcher.h"
#include "crashgym/crash_report.h"
#include "crashgym/error.h"
#include "crashgym/sim_executor.h"
#include "crashgym/subprocess.h"
#include "crashgym/toolchain.h"
#include "crashgym/util.h"
#include "oracles.h"

namespace crashgym {
namespace {

namespace fs = std::filesystem;

const fs::path kReports = fs::path(CRASHGYM_SOURCE_DIR) / "testing/reports";

std::vector<VmResult> Materialize(const std::vector<oracle::Vm> &vms,
                                  const std::string &matching) {
  std::vector<VmResult> out;
  for (size_t i = 0; i < vms.size(); ++i) {
    VmResult r;
    r.vm_index = static_cast<int>(i);
    switch (vms[i]) {
      case oracle::Vm::kNone: r.status = VmStatus::kNoCrash; break;
      case oracle::Vm::kMatch:
        r.status = VmStatus::kCrash;
        r.report = matching;
        break;
      case oracle::Vm::kOtherCrash:
        r.status = VmStatus::kCrash;
        r.report = SimulatedExecutor::UnrelatedCrashReport();
        break;
      case oracle::Vm::kBoot: r.status = VmStatus::kBootFail; break;
      case oracle::Vm::kExec: r.status = VmStatus::kExecError; break;
    }
    out.push_back(std::move(r));
  }
  return out;
}

TEST(ClassifyRepro, TruthTableUpToFourVms) {
  std::string report = ReadFile(kReports / "01-hci-slab-oob.txt");
  CrashSignature baseline = Signature(ParseReport(report));
  int checked = 0;
  for (int n = 1; n <= 4; ++n) {
    for (const auto &combo : oracle::Combinations(n)) {
      auto per_vm = Materialize(combo, report);
      for (bool with_baseline : {true, false}) {
        auto want = oracle::ExpectedRepro(combo, with_baseline);
        auto [cls, nondet] = ClassifyRepro(
            per_vm, with_baseline ? std::optional(baseline) : std::nullopt);
        ASSERT_EQ(cls, want.cls) << "n=" << n << " baseline=" << with_baseline;
        ASSERT_EQ(nondet, want.nondet) << "n=" << n;
        ++checked;
      }
    }
  }
  EXPECT_EQ(checked, 2 * (5 + 25 + 125 + 625));
}

TEST(ClassifyRepro, MatchesBaselineRejectsGarbage) {
  std::string report = ReadFile(kReports / "02-ext4-uaf-prefixed.txt");
  CrashSignature sig = Signature(ParseReport(report));
  EXPECT_TRUE(MatchesBaseline(report, sig));
  EXPECT_FALSE(MatchesBaseline("no header here", sig));
  EXPECT_FALSE(MatchesBaseline(SimulatedExecutor::UnrelatedCrashReport(), sig));
}

TEST(AssignReproducers, SplitsKinds) {
  ReproJob job;
  job.vm_count = 5;
  job.reproducers = {{ReproducerKind::kSyz, "s1"}, {ReproducerKind::kC, "c1"},
                     {ReproducerKind::kSyz, "s2"}};
  auto a = AssignReproducers(job);
  ASSERT_EQ(a.size(), 5u);
  // Syz takes the larger half on odd counts, round robin; the rest C.
  EXPECT_EQ(a[0]->text, "s1");
  EXPECT_EQ(a[1]->text, "s2");
  EXPECT_EQ(a[2]->text, "s1");
  EXPECT_EQ(a[3]->text, "c1");
  EXPECT_EQ(a[4]->text, "c1");
  job.reproducers = {{ReproducerKind::kC, "c1"}, {ReproducerKind::kC, "c2"}};
  a = AssignReproducers(job);
  EXPECT_EQ(a[0]->text, "c1");
  EXPECT_EQ(a[1]->text, "c2");
  EXPECT_EQ(a[2]->text, "c1");
}

TEST(Validation, RejectsBadJobs) {
  BuildJob b;
  b.commit = "abc";
  EXPECT_NO_THROW(ValidateBuildJob(b));
  b.cores = 0;
  EXPECT_THROW(ValidateBuildJob(b), Error);
  ReproJob r;
  r.image = "img";
  r.reproducers = {{ReproducerKind::kC, "x"}};
  EXPECT_NO_THROW(ValidateReproJob(r));
  r.vm_count = 0;
  EXPECT_THROW(ValidateReproJob(r), Error);
  r.vm_count = 1;
  r.reproducers.clear();
  EXPECT_THROW(ValidateReproJob(r), Error);
}

BuildJob SimBuild(const std::string &bug, const std::string &patch) {
  BuildJob b;
  b.commit = std::string(40, 'a');
  b.config = "# Linux/x86 6.1.0 Kernel Configuration\nCONFIG_CC_VERSION_TEXT=\"gcc (GCC) 12.2.0\"\n";
  b.patch = patch;
  b.metadata = {{"bug_id", bug}};
  return b;
}

TEST(RunBuild, BadPatchNeverCompiles) {
  std::string patch = "--- a/x.c\n+++ b/x.c\n@@ -1 +1 @@\n-a\n+b\n";
  std::string script = "bug-1 " + SimulatedExecutor::PatchKey(patch) + " build=bad_patch\n";
  SimulatedExecutor sim(ParseSimScript(script));
  auto table = ToolchainTable::Parse(BuiltinToolchainTable());
  BuildOutcome out = RunBuild(SimBuild("bug-1", patch), table, sim, "job-1", [](auto) {});
  ASSERT_TRUE(std::holds_alternative<BadPatch>(out));
  for (const auto &c : sim.calls()) EXPECT_FALSE(StartsWith(c, "compile")) << c;
}

TEST(RunBuild, OutcomesFollowScript) {
  std::string script =
      "* baseline build=ok\n"
      "bug-c * build=compile_error diag=x.c:3: error: expected ';'\n"
      "bug-t * build=timeout\n"
      "bug-i * build=infra\n";
  SimulatedExecutor sim(ParseSimScript(script));
  auto table = ToolchainTable::Parse(BuiltinToolchainTable());
  std::string p = "--- a/x.c\n+++ b/x.c\n@@ -1 +1 @@\n-a\n+b\n";
  std::string log;
  auto sink = [&](std::string_view s) { log.append(s); };
  auto ok = RunBuild(SimBuild("bug-ok", ""), table, sim, "j1", sink);
  EXPECT_TRUE(IsBuildSuccess(ok));
  EXPECT_NE(log.find("crashgym/toolchain:gcc-12"), std::string::npos);
  auto ce = RunBuild(SimBuild("bug-c", p), table, sim, "j2", sink);
  ASSERT_TRUE(std::holds_alternative<CompileError>(ce));
  EXPECT_NE(std::get<CompileError>(ce).log_excerpt.find("expected ';'"), std::string::npos);
  EXPECT_TRUE(std::holds_alternative<BuildTimeout>(RunBuild(SimBuild("bug-t", p), table, sim, "j3", sink)));
  EXPECT_TRUE(std::holds_alternative<InfraError>(RunBuild(SimBuild("bug-i", p), table, sim, "j4", sink)));
}

TEST(RunBuild, UnsupportedToolchainIsInfra) {
  SimulatedExecutor sim(ParseSimScript("* * build=ok\n"));
  auto table = ToolchainTable::Parse("compiler gcc 12 img\n");
  BuildJob b = SimBuild("bug", "");
  b.config = "# Linux/x86 3.2.0 Kernel Configuration\n";
  EXPECT_TRUE(std::holds_alternative<InfraError>(RunBuild(b, table, sim, "j", [](auto) {})));
  EXPECT_TRUE(sim.calls().empty());
}

TEST(RunRepro, ParallelVmsAndSlots) {
  std::string report = ReadFile(kReports / "01-hci-slab-oob.txt");
  SimulatedExecutor sim(ParseSimScript("bug-1 * repro=trigger:2,bootfail:1 vm_delay_ms=5\n"));
  sim.SetReport("bug-1", report);
  ReproJob job;
  job.image = "sim-image/bug-1/baseline";
  job.vm_count = 6;
  job.reproducers = {{ReproducerKind::kC, "int main() {}"}};
  job.metadata = {{"bug_id", "bug-1"}};
  job.baseline = Signature(ParseReport(report));
  std::atomic<int> held{0}, peak{0};
  VmSlots slots{[&] {
                  int now = ++held;
                  int p = peak.load();
                  while (now > p && !peak.compare_exchange_weak(p, now)) {
                  }
                },
                [&] { --held; }};
  ReproOutcome out = RunRepro(job, sim, [](auto) {}, 3, slots);
  ASSERT_EQ(out.per_vm.size(), 6u);
  EXPECT_EQ(out.aggregate, ReproClass::kTriggered);
  EXPECT_TRUE(out.nondet);
  EXPECT_LE(peak.load(), 3);
  EXPECT_EQ(held.load(), 0);
  for (int i = 0; i < 6; ++i) EXPECT_EQ(out.per_vm[i].vm_index, i);
}

TEST(Toolchain, ParsesCompilerIds) {
  EXPECT_EQ(ParseCompilerId("gcc (GCC) 9.3.0"), (CompilerId{"gcc", 9}));
  EXPECT_EQ(ParseCompilerId("Debian clang version 11.0.1-2"), (CompilerId{"clang", 11}));
  EXPECT_EQ(ParseCompilerId("CONFIG_CC_VERSION_TEXT=\"gcc (Debian 12.2.0-14) 12.2.0\"\n"),
            (CompilerId{"gcc", 12}));
  EXPECT_FALSE(ParseCompilerId("no compiler here"));
  EXPECT_EQ(ParseConfigRelease("#\n# Linux/x86 5.4.0 Kernel Configuration\n"), "5.4.0");
}

TEST(Toolchain, VersionCompare) {
  EXPECT_LT(CompareVersions("5.4.200", "5.10"), 0);
  EXPECT_GT(CompareVersions("6.1", "5.15.99"), 0);
  EXPECT_EQ(CompareVersions("6.1.0-rc2", "6.1"), 0);
}

TEST(Toolchain, SelectionRules) {
  auto t = ToolchainTable::Parse(BuiltinToolchainTable());
  EXPECT_EQ(SelectToolchain(t, "gcc (GCC) 10.2.1", "5.4.0"), "crashgym/toolchain:gcc-10");
  EXPECT_EQ(SelectToolchain(t, "clang version 15.0.7", ""), "crashgym/toolchain:clang-15");
  // Unmapped compiler falls back to the release rules.
  EXPECT_EQ(SelectToolchain(t, "gcc (GCC) 4.9.0", "5.10.3"), "crashgym/toolchain:gcc-10");
  EXPECT_EQ(SelectToolchain(t, "", "4.19.1"), "crashgym/toolchain:gcc-8");
  try {
    SelectToolchain(t, "", "3.10");
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnsupportedToolchain);
  }
}

TEST(ConsoleWatcher, BootThenCrashAcrossChunks) {
  ConsoleWatcher w;
  std::string console =
      "[    0.000000] Linux version 6.1.0\n"
      "Debian GNU/Linux 12 syzkaller ttyS0\n"
      "syzkaller login: \n"
      "[   42.000001][ T100] BUG: KASAN: use-after-free in f+0x1/0x2 a.c:1\n"
      "[   42.000002][ T100] Read of size 8 at addr 0 by task t/1\n"
      "[   42.000003][ T100] Call Trace:\n"
      "[   42.000004][ T100]  f+0x1/0x2 a.c:1\n"
      "[   42.000005][ T100] ---[ end trace 0000000000000000 ]---\n"
      "[   42.000006][ T100] trailing noise\n";
  for (size_t i = 0; i < console.size(); i += 7) w.Feed(console.substr(i, 7));
  w.Finish();
  EXPECT_TRUE(w.booted());
  EXPECT_EQ(w.state(), ConsoleWatcher::State::kCrashed);
  EXPECT_TRUE(w.report_complete());
  EXPECT_NE(w.report().find("Call Trace:"), std::string::npos);
  EXPECT_EQ(w.report().find("trailing noise"), std::string::npos);
  EXPECT_EQ(ParseReport(w.report()).title, "KASAN: use-after-free Read in f");
}

TEST(ConsoleWatcher, LineCapCompletesReport) {
  ConsoleWatcher w("login:", 5);
  w.Feed("login:\nWARNING: CPU: 0 PID: 1 at a.c:1 f+0x1/0x2\n1\n2\n3\n4\n5\n6\n");
  EXPECT_TRUE(w.report_complete());
  EXPECT_EQ(SplitLines(w.report()).size(), 5u);
}

TEST(Subprocess, ExitCodesAndOutput) {
  std::string out;
  auto r = RunCapture({"sh", "-c", "echo hello; exit 3"}, &out);
  EXPECT_EQ(r.exit_code, 3);
  EXPECT_EQ(out, "hello\n");
  r = RunCapture({"/nonexistent/binary"}, &out);
  EXPECT_FALSE(r.ok());
  EXPECT_FALSE(r.spawn_error.empty());
}

TEST(Subprocess, TimeoutKillsGroup) {
  SubprocessOptions o;
  o.timeout = std::chrono::milliseconds(200);
  auto start = std::chrono::steady_clock::now();
  auto r = RunSubprocess({"sh", "-c", "sleep 30 & sleep 30"}, o);
  EXPECT_TRUE(r.timed_out);
  EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(10));
}

TEST(Subprocess, OutputCallbackCanStop) {
  SubprocessOptions o;
  std::string seen;
  o.on_output = [&](std::string_view chunk) {
    seen.append(chunk);
    return seen.find("stop") == std::string::npos;
  };
  auto r = RunSubprocess({"sh", "-c", "echo go; echo stop; sleep 30"}, o);
  EXPECT_TRUE(r.stopped);
}

}  // namespace
}  // namespace crashgym
