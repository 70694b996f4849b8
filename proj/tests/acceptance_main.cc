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

// Acceptance runner: one pass/fail line per primary criterion.
//
//   acceptance [--criterion N] [--work DIR]
//
// Exit status is 0 when every selected criterion holds.

#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "crashgym/campaign.h"
#include "crashgym/crash_report.h"
#include "crashgym/error.h"
#include "crashgym/evaluation.h"
#include "crashgym/executor.h"
#include "crashgym/job_service.h"
#include "crashgym/json_io.h"
#include "crashgym/sim_executor.h"
#include "crashgym/source_functions.h"
#include "crashgym/util.h"
#include "fixture_gen.h"
#include "oracles.h"

namespace crashgym {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

const fs::path kSource = CRASHGYM_SOURCE_DIR;

// Collects mismatches; the first few become the detail line.
class Check {
 public:
  void Expect(bool ok, const std::string &what) {
    ++checks_;
    if (!ok) failures_.push_back(what);
  }
  void Equal(const std::string &got, const std::string &want, const std::string &what) {
    Expect(got == want, what + ": got " + got + ", want " + want);
  }
  bool ok() const { return failures_.empty(); }
  std::string Detail() const {
    std::ostringstream out;
    if (failures_.empty()) {
      out << checks_ << " checks";
      return out.str();
    }
    out << failures_.size() << "/" << checks_ << " checks failed";
    for (size_t i = 0; i < failures_.size() && i < 6; ++i) out << "; " << failures_[i];
    return out.str();
  }

 private:
  int checks_ = 0;
  std::vector<std::string> failures_;
};

void Within(Check &c, Clock::time_point start, std::chrono::milliseconds budget) {
  auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start);
  c.Expect(ms <= budget, "runtime " + std::to_string(ms.count()) + " ms over " +
                             std::to_string(budget.count()) + " ms");
}

fs::path Fresh(const fs::path &p) {
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::map<std::string, EvaluationSummary> LedgerSummaries(const fs::path &work,
                                                         std::vector<ResultSet> *sets) {
  fixtures::WriteReferenceLedger(work);
  std::map<std::string, EvaluationSummary> out;
  for (const auto &row : fixtures::ReferenceLedgerRows()) {
    auto results = LoadResults(work / row.dir / "results.jsonl");
    out[row.dir] = Summarize(results);
    if (sets) sets->push_back(ToResultSet(results));
  }
  return out;
}

// Pass rates of the nine ledger configurations.
Check Criterion1(const fs::path &work) {
  Check c;
  auto start = Clock::now();
  auto summaries = LedgerSummaries(work, nullptr);
  const std::vector<std::pair<std::string, std::string>> want = {
      {"kgym-oracle-gpt-4-turbo", "1.40"},
      {"kgym-oracle-gpt-4o", "2.80"},
      {"kgym-oracle-functionwise-gpt-4o", "10.49"},
      {"simple-nobic-gpt-4o", "17.48"},
      {"simple-gpt-4o", "21.67"},
      {"simple-feedback-gpt-4o", "37.76"},
      {"exploration-gpt-4o", "15.38"},
      {"simple-claude-opus-4.1", "32.16"},
      {"simple-gpt-5-thinking", "43.36"},
  };
  for (const auto &[dir, rate] : want) {
    const auto &s = summaries.at(dir);
    c.Equal(FormatPercent(s.pass_rate), rate,
            dir + " " + std::to_string(s.solved) + "/" + std::to_string(s.n_bugs));
  }
  Within(c, start, std::chrono::seconds(1));
  return c;
}

Check Criterion2(const fs::path &work) {
  Check c;
  auto s = LedgerSummaries(work, nullptr);
  c.Equal(FormatPercent(s.at("simple-gpt-4o").bad_patch_rate), "4.89", "simple-gpt-4o bad patch");
  c.Equal(FormatPercent(s.at("simple-gpt-5-thinking").bad_patch_rate), "4.19",
          "simple-gpt-5-thinking bad patch");
  auto deltas =
      DerivedDeltas({s.at("kgym-oracle-gpt-4o"), s.at("kgym-oracle-functionwise-gpt-4o")});
  c.Expect(!deltas.empty(), "no deltas");
  if (!deltas.empty()) c.Equal(deltas[0].display, "76%", "bad patch reduction");
  return c;
}

Check Criterion3(const fs::path &work) {
  Check c;
  std::vector<ResultSet> sets;
  auto s = LedgerSummaries(work, &sets);
  Fraction u = CombinedPassRate(sets);
  c.Equal(std::to_string(u.num) + "/" + std::to_string(u.den), "98/143", "union count");
  c.Equal(FormatPercent(u), "68.53", "union rate");

  auto feedback = LoadResults(work / "simple-feedback-gpt-4o" / "results.jsonl");
  c.Equal(RenderAttemptHistogram(AttemptHistogram(feedback), 143),
          "1: 34 (23.77%), 2: 8 (5.59%), 3: 12 (8.39%); cumulative 37.76%", "histogram");

  const auto &simple = s.at("simple-gpt-4o");
  const auto &fb = s.at("simple-feedback-gpt-4o");
  c.Equal(simple.AvgCostPerBug(), "0.08", "simple avg cost");
  c.Equal(fb.AvgCostPerBug(), "0.17", "feedback avg cost");
  c.Equal(FormatRatio(Ratio(fb.AvgCostFraction(), simple.AvgCostFraction())), "2.13",
          "cost ratio");
  c.Equal(FormatRatio(Ratio(fb.pass_rate, simple.pass_rate)), "1.74", "pass ratio");
  return c;
}

bool HasBrace(const std::string &line) {
  return line.find_first_of("{}") != std::string::npos;
}

// Body-only rewrite of a function definition.
std::string Mutate(const std::string &text, std::mt19937_64 &rng) {
  std::vector<std::string> lines;
  for (auto l : SplitLines(text)) lines.emplace_back(l);
  size_t body_begin = 0;
  while (body_begin < lines.size() && lines[body_begin].find('{') == std::string::npos) {
    ++body_begin;
  }
  ++body_begin;
  size_t body_end = lines.size() - 1;
  int ops = 1 + static_cast<int>(rng() % 4);
  for (int k = 0; k < ops; ++k) {
    size_t span = body_end > body_begin ? body_end - body_begin : 0;
    size_t at = body_begin + (span ? rng() % span : 0);
    switch (rng() % 3) {
      case 0:
        lines.insert(lines.begin() + at, "\tx += " + std::to_string(rng() % 100) + ";");
        ++body_end;
        break;
      case 1:
        if (span > 1 && !HasBrace(lines[at])) {
          lines.erase(lines.begin() + at);
          --body_end;
        }
        break;
      default:
        if (span && !HasBrace(lines[at])) {
          lines[at] = "\tx ^= " + std::to_string(rng() % 100) + ";";
        }
        break;
    }
  }
  return Join(lines, "\n");
}

Check Criterion4(const fs::path &work) {
  Check c;
  auto start = Clock::now();
  std::mt19937_64 rng(404);
  int bad_patches = 0;
  for (int round = 0; round < 100; ++round) {
    fs::path root = Fresh(work / "tree");
    auto synth = fixtures::RandomTree(rng, 2 + static_cast<int>(rng() % 3),
                                      2 + static_cast<int>(rng() % 5));
    fixtures::WriteTree(root, synth);
    SourceTree tree(root);
    auto picked = synth.functions;
    std::shuffle(picked.begin(), picked.end(), rng);
    picked.resize(1 + rng() % std::min<size_t>(picked.size(), 6));
    std::map<std::string, std::string> expected = synth.files;
    std::vector<FunctionEdit> edits;
    for (const auto &fn : picked) {
      std::string repl = Mutate(fn.text, rng);
      auto &file = expected[fn.file];
      file.replace(file.find(fn.text), fn.text.size(), repl);
      edits.push_back({LocateFunction(tree, fn.name).front(), repl});
    }
    std::string tag = "round " + std::to_string(round);
    CandidatePatch patch = SynthesizePatch(tree, "base", edits);
    ApplyCheck check = CheckApplies(tree, patch.diff);
    if (!check.ok) ++bad_patches;
    c.Expect(check.ok, tag + ": " + check.reason);
    PatchApplication applied = ApplyDiff(tree, patch.diff);
    for (const auto &[path, text] : applied.files) {
      c.Expect(text.has_value() && *text == expected[path], tag + ": " + path + " differs");
    }
    size_t changed = 0;
    for (const auto &[path, text] : expected) changed += text != synth.files.at(path);
    c.Expect(applied.files.size() == changed, tag + ": file count");
  }
  c.Expect(bad_patches == 0, std::to_string(bad_patches) + " BadPatch");
  Within(c, start, std::chrono::seconds(30));
  return c;
}

// LocateFunction against the whole-file scanner for every identifier.
void AgreeWithScanner(Check &c, const fs::path &root) {
  std::map<std::string, std::vector<FunctionDef>> expected;
  std::set<std::string> names;
  for (const auto &e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::string ext = e.path().extension().string();
    if (ext != ".c" && ext != ".h") continue;
    std::string rel = fs::relative(e.path(), root).generic_string();
    std::string text = ReadFile(e.path());
    for (auto &id : oracle::Identifiers(text)) names.insert(id);
    for (const auto &d : oracle::ScanDefinitions(text)) {
      expected[d.name].push_back({d.name, rel, d.start_line, d.end_line, d.text});
    }
  }
  auto order = [](const FunctionDef &a, const FunctionDef &b) {
    return std::tie(a.file, a.start_line) < std::tie(b.file, b.start_line);
  };
  SourceTree tree(root);
  for (const auto &name : names) {
    auto it = expected.find(name);
    std::vector<FunctionDef> got;
    try {
      got = LocateFunction(tree, name);
    } catch (const Error &e) {
      c.Expect(it == expected.end() && e.code() == ErrorCode::kNotFound,
               name + ": " + e.what());
      continue;
    }
    if (it == expected.end()) {
      c.Expect(false, name + " located without a definition");
      continue;
    }
    auto want = it->second;
    std::sort(want.begin(), want.end(), order);
    std::sort(got.begin(), got.end(), order);
    c.Expect(got == want, name + " definitions differ");
    const std::string hint = want.back().file;
    auto hinted = LocateFunction(tree, name, hint);
    c.Expect(!hinted.empty() && hinted.front().file == hint, name + " hint ignored");
  }
}

Check Criterion5(const fs::path &work) {
  Check c;
  auto start = Clock::now();
  fixtures::WriteCorpus(Fresh(work / "corpus"), Fresh(work / "tree"), 40);
  AgreeWithScanner(c, work / "tree");

  std::mt19937_64 rng(55);
  for (int t = 0; t < 10; ++t) {
    fs::path root = Fresh(work / ("random-" + std::to_string(t)));
    fixtures::WriteTree(root, fixtures::RandomTree(rng, 4, 6));
    AgreeWithScanner(c, root);
  }

  fs::path dups = Fresh(work / "dups");
  WriteFile(dups / "a.c", "static void release(void)\n{\n}\n");
  WriteFile(dups / "b.c", "static void release(void)\n{\n\tint x;\n}\n");
  WriteFile(dups / "sub/c.h", "void release(void);\nint only_proto(int);\n");
  WriteFile(dups / "sub/d.c",
            "int only_proto(int);\nstatic inline int\nrelease_all(int n)\n{\n"
            "\treturn n;\n}\n");
  AgreeWithScanner(c, dups);
  Within(c, start, std::chrono::seconds(10));
  return c;
}

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

Check Criterion6(const fs::path &) {
  Check c;
  auto start = Clock::now();
  std::string report = ReadFile(kSource / "testing/reports/01-hci-slab-oob.txt");
  CrashSignature baseline = Signature(ParseReport(report));
  for (int n = 1; n <= 4; ++n) {
    for (const auto &combo : oracle::Combinations(n)) {
      auto per_vm = Materialize(combo, report);
      for (bool with_baseline : {true, false}) {
        auto want = oracle::ExpectedRepro(combo, with_baseline);
        auto [cls, nondet] =
            ClassifyRepro(per_vm, with_baseline ? std::optional(baseline) : std::nullopt);
        std::string tag = "n=" + std::to_string(n) + (with_baseline ? " baseline" : "");
        c.Expect(cls == want.cls, tag + " class");
        c.Expect(nondet == want.nondet, tag + " nondet");
      }
    }
  }
  Within(c, start, std::chrono::seconds(5));
  return c;
}

Check Criterion7(const fs::path &work) {
  Check c;
  auto start = Clock::now();
  fixtures::WriteEndToEnd(Fresh(work / "e2e"));
  std::vector<CampaignResult> runs;
  for (const char *out : {"out-1", "out-2"}) {
    RunManifest m = LoadRunManifest(work / "e2e" / "run.conf");
    m.output = work / "e2e" / out;
    runs.push_back(RunCampaign(m));
  }
  for (const auto &r : runs) {
    c.Expect(r.results.size() == static_cast<size_t>(fixtures::kEndToEndBugs),
             "campaign covered " + std::to_string(r.results.size()) + " bugs");
    c.Expect(r.summary.solved > 0, "nothing solved");
    for (const auto &b : r.results) {
      for (const auto &a : b.attempts) {
        c.Expect(a.agent_error.empty(), b.bug_id + ": " + a.agent_error);
      }
    }
  }
  for (const char *f : {"results.jsonl", "report.md", "report.csv"}) {
    fs::path a = work / "e2e/out-1" / f, b = work / "e2e/out-2" / f;
    c.Expect(fs::exists(a) && fs::exists(b), std::string(f) + " missing");
    if (fs::exists(a) && fs::exists(b)) {
      c.Expect(ReadFile(a) == ReadFile(b), std::string(f) + " differs between runs");
    }
  }
  Within(c, start, std::chrono::minutes(2));
  return c;
}

Check Criterion8(const fs::path &) {
  Check c;
  auto start = Clock::now();
  fs::path dir = kSource / "testing/reports";
  auto labels = oracle::LoadLabels(dir);
  c.Expect(labels.size() >= 10, std::to_string(labels.size()) + " labeled reports");
  for (const auto &l : labels) {
    CrashReport r = ParseReport(ReadFile(dir / l.file));
    c.Equal(r.title, l.title, l.file + " title");
    c.Equal(std::string(BugTypeName(ClassifyReport(r))), l.bug_type, l.file + " type");
    c.Equal(Join(Signature(r).top_frames, " "), Join(l.top_frames, " "), l.file + " frames");
  }
  Within(c, start, std::chrono::seconds(1));
  return c;
}

constexpr int kDurableJobs = 8;

JobServiceOptions DurableOptions(const fs::path &root) {
  JobServiceOptions o;
  o.root = root;
  o.workers = 1;
  o.total_cores = 2;
  o.toolchains = ToolchainTable::Parse("release 1.0 99.0 img\n");
  return o;
}

BuildJob DurableBuild(int i) {
  BuildJob b;
  b.commit = "c" + std::to_string(i);
  b.config = "# Linux/x86 6.1.0 Kernel Configuration\n";
  b.metadata = {{"bug_id", "bug-" + std::to_string(i)}};
  return b;
}

std::vector<Json> JournalLines(const fs::path &root) {
  std::vector<Json> out;
  if (!fs::exists(root / "journal")) return out;
  const std::string text = ReadFile(root / "journal");
  for (auto line : SplitLines(text)) {
    try {
      out.push_back(Json::parse(line));
    } catch (const Json::exception &) {
      // A torn tail from the kill.
    }
  }
  return out;
}

int CountOp(const std::vector<Json> &lines, const std::string &op) {
  return static_cast<int>(std::count_if(lines.begin(), lines.end(), [&](const Json &j) {
    return j.value("op", "") == op;
  }));
}

// Child side: a slow service that never exits on its own.
[[noreturn]] void ServeUntilKilled(const fs::path &root) {
  auto sim = std::make_shared<SimulatedExecutor>(ParseSimScript("* * build=ok delay_ms=150\n"));
  JobService svc(DurableOptions(root), sim, sim);
  for (int i = 0; i < kDurableJobs; ++i) svc.SubmitBuild(DurableBuild(i));
  for (;;) std::this_thread::sleep_for(std::chrono::seconds(1));
}

Check Criterion9(const fs::path &work) {
  Check c;
  fs::path root = Fresh(work / "gym");
  std::cout.flush();
  pid_t child = ::fork();
  if (child == 0) {
    try {
      ServeUntilKilled(root);
    } catch (...) {
      ::_exit(3);
    }
  }
  c.Expect(child > 0, "fork failed");
  if (child <= 0) return c;

  // Kill once some jobs finished and others still wait.
  auto deadline = Clock::now() + std::chrono::seconds(30);
  bool mid_queue = false;
  while (Clock::now() < deadline) {
    auto lines = JournalLines(root);
    int finished = CountOp(lines, "finish");
    if (CountOp(lines, "submit") == kDurableJobs && finished >= 1) {
      mid_queue = finished < kDurableJobs - 1;
      break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  ::kill(child, SIGKILL);
  int status = 0;
  ::waitpid(child, &status, 0);
  c.Expect(WIFSIGNALED(status), "service exited before the kill");
  c.Expect(mid_queue, "kill did not land mid-queue");

  auto before = JournalLines(root);
  std::vector<std::string> ids;
  for (const auto &j : before) {
    if (j.value("op", "") == "submit") ids.push_back(j["id"]);
  }
  c.Expect(ids.size() == kDurableJobs, std::to_string(ids.size()) + " submits journaled");

  auto sim = std::make_shared<SimulatedExecutor>(ParseSimScript("* * build=ok\n"));
  {
    JobService svc(DurableOptions(root), sim, sim);
    for (const auto &id : ids) {
      auto job = svc.WaitFor(id, std::chrono::seconds(30));
      c.Expect(job.has_value() && IsTerminal(job->state), id + " never terminated");
    }
    std::string fresh = svc.SubmitBuild(DurableBuild(kDurableJobs));
    c.Expect(std::find(ids.begin(), ids.end(), fresh) == ids.end(), "id reused: " + fresh);
    svc.Wait(fresh);
    ids.push_back(fresh);
    svc.Shutdown(true);
  }

  std::map<std::string, int> finishes;
  for (const auto &j : JournalLines(root)) {
    if (j.value("op", "") == "finish") ++finishes[j["id"].get<std::string>()];
  }
  for (const auto &id : ids) {
    c.Expect(finishes[id] == 1, id + " finished " + std::to_string(finishes[id]) + " times");
  }
  c.Expect(finishes.size() == ids.size(), "finish lines for unknown ids");

  // A second restart changes nothing.
  JobService again(DurableOptions(root), sim, sim);
  for (const auto &id : ids) c.Expect(IsTerminal(again.Poll(id).state), id + " not terminal");
  again.Shutdown(true);
  return c;
}

}  // namespace
}  // namespace crashgym

int main(int argc, char **argv) {
  using namespace crashgym;
  CLI::App app{"acceptance runner"};
  int only = 0;
  fs::path work = fs::temp_directory_path() / "crashgym-acceptance";
  app.add_option("--criterion", only, "run one criterion (default: all)")
      ->check(CLI::Range(1, 9));
  app.add_option("--work", work, "scratch directory");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::function<Check(const fs::path &)>> runners = {
      Criterion1, Criterion2, Criterion3, Criterion4, Criterion5,
      Criterion6, Criterion7, Criterion8, Criterion9};
  bool all_ok = true;
  for (int n = 1; n <= 9; ++n) {
    if (only != 0 && n != only) continue;
    Check result;
    try {
      result = runners[n - 1](Fresh(work / ("criterion-" + std::to_string(n))));
    } catch (const std::exception &e) {
      result.Expect(false, std::string("exception: ") + e.what());
    }
    all_ok &= result.ok();
    std::cout << "criterion " << n << ": " << (result.ok() ? "PASS" : "FAIL") << " "
              << result.Detail() << std::endl;
  }
  return all_ok ? 0 : 1;
}
