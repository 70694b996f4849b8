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

// crashgym: dataset checks, repair campaigns, reports and the job service.

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <pthread.h>

#include "CLI11.hpp"
#include "crashgym/bug_dataset.h"
#include "crashgym/campaign.h"
#include "crashgym/crash_report.h"
#include "crashgym/error.h"
#include "crashgym/evaluation.h"
#include "crashgym/http_service.h"
#include "crashgym/job_service.h"
#include "crashgym/util.h"

namespace fs = std::filesystem;
using namespace crashgym;

namespace {

int Ingest(const fs::path &root) {
  DatasetScan scan = ScanDataset(root);
  for (const auto &p : scan.problems) {
    for (const auto &v : p.violations) {
      std::cout << p.bug_id << ": " << v.field << ": " << v.message << "\n";
    }
  }
  std::cout << scan.records.size() << " records OK";
  if (!scan.problems.empty()) std::cout << ", " << scan.problems.size() << " rejected";
  std::cout << "\n";
  for (const auto &[type, n] : CountByType(scan.records)) {
    std::cout << "  " << BugTypeName(type) << ": " << n << "\n";
  }
  return scan.problems.empty() ? 0 : 1;
}

int Parse(const fs::path &report_path) {
  CrashReport report = ParseReport(ReadFile(report_path));
  CrashSignature sig = Signature(report);
  std::cout << "title: " << report.title << "\n"
            << "bug_type: " << BugTypeName(ClassifyReport(report)) << "\n"
            << "sanitizer: "
            << (report.sanitizer == Sanitizer::kKasan ? "KASAN" : "other") << "\n"
            << "top_frames:";
  for (const auto &f : sig.top_frames) std::cout << " " << f;
  std::cout << "\n";
  return 0;
}

struct GymFlags {
  std::string gym;
  fs::path sim_script;
  fs::path toolchains;
  fs::path store;
  fs::path tree;
  int workers = 2;
};

GymBinding OpenGym(const GymFlags &f, const std::vector<BugRecord> &bugs) {
  RunManifest m;
  if (!f.gym.empty()) {
    m.executor = "remote";
    m.gym = f.gym;
  } else if (!f.sim_script.empty()) {
    m.executor = "simulated";
    m.sim_script = f.sim_script;
  } else {
    m.executor = "real";
  }
  m.tree = f.tree;
  if (!f.toolchains.empty()) m.toolchains = f.toolchains;
  fs::path store = f.store.empty() ? fs::temp_directory_path() / "crashgym-store" : f.store;
  return MakeGym(m, bugs, store, f.workers);
}

int Verify(const fs::path &root, const GymFlags &flags, int vm_count) {
  std::vector<BugRecord> bugs = LoadDataset(root);
  GymBinding gym = OpenGym(flags, bugs);
  BaselineOptions opts;
  opts.vm_count = vm_count;
  int failures = 0;
  for (const auto &bug : bugs) {
    BaselineVerdict v = VerifyBaseline(bug, *gym.gym, opts);
    std::cout << bug.bug_id << " " << BaselineStatusName(v.status)
              << (v.nondeterministic ? " nondet" : "") << "\n";
    if (v.status != BaselineStatus::kReproducible) ++failures;
  }
  std::cout << bugs.size() - failures << "/" << bugs.size() << " reproducible\n";
  return failures == 0 ? 0 : 1;
}

int Run(const fs::path &config, bool quiet) {
  RunManifest m = LoadRunManifest(config);
  CampaignResult r = RunCampaign(m, [&](const CampaignProgress &p) {
    if (!quiet) std::cerr << "[" << p.done << "/" << p.total << "] solved " << p.solved << "\n";
  });
  std::cout << RenderRunReport(r.results, ReportFormat::kMarkdown);
  return 0;
}

int Report(const std::vector<fs::path> &runs, const std::string &format,
           const fs::path &out_path) {
  std::vector<EvaluationSummary> summaries;
  std::vector<ResultSet> sets;
  std::vector<std::vector<BugResult>> all;
  for (const auto &dir : runs) {
    fs::path ledger = fs::is_directory(dir) ? dir / "results.jsonl" : dir;
    all.push_back(LoadResults(ledger));
    summaries.push_back(Summarize(all.back()));
    sets.push_back(ToResultSet(all.back()));
    sets.back().name = summaries.back().setup + " " + summaries.back().model;
  }
  std::string out;
  if (format == "csv") {
    out = EmitReport(summaries, ReportFormat::kCsv);
  } else {
    out = EmitReport(summaries, ReportFormat::kMarkdown);
    for (size_t i = 0; i < summaries.size(); ++i) {
      if (all[i].empty() || all[i].front().max_attempts <= 1) continue;
      out += "\nSolved at attempt (" + sets[i].name + "): " +
             RenderAttemptHistogram(summaries[i].attempt_histogram, summaries[i].n_bugs) + "\n";
    }
    if (summaries.size() > 1) {
      out += "\n## Solve sets\n\n";
      try {
        out += EmitSolveViews(sets);
      } catch (const Error &e) {
        out += std::string("not comparable: ") + e.what() + "\n";
      }
      out += "\n## Against " + sets.front().name + "\n\n";
      try {
        for (const auto &d : DerivedDeltas(summaries)) {
          out += "- " + d.name + ": " + d.display + "\n";
        }
      } catch (const Error &e) {
        out += std::string("n/a: ") + e.what() + "\n";
      }
    }
  }
  if (out_path.empty()) {
    std::cout << out;
  } else {
    WriteFile(out_path, out);
  }
  return 0;
}

int Serve(const std::string &addr, const GymFlags &flags, int cores, const fs::path &dataset,
          const fs::path &cassette, const fs::path &prices) {
  size_t colon = addr.rfind(':');
  if (colon == std::string::npos) throw Error(ErrorCode::kValidation, "--addr: expected host:port");
  std::string host = addr.substr(0, colon);
  int port = std::stoi(addr.substr(colon + 1));

  // Signals are taken synchronously below; every thread inherits the mask.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  std::vector<BugRecord> bugs;
  if (!dataset.empty()) bugs = LoadDataset(dataset);
  RunManifest m;
  m.executor = flags.sim_script.empty() ? "real" : "simulated";
  if (!flags.sim_script.empty()) m.sim_script = flags.sim_script;
  if (!flags.toolchains.empty()) m.toolchains = flags.toolchains;
  m.tree = flags.tree;
  fs::path store = flags.store.empty() ? fs::path("crashgym-store") : flags.store;

  JobServiceOptions opts;
  opts.root = store / "gym";
  opts.workers = flags.workers;
  opts.total_cores = cores;
  opts.toolchains = LoadToolchains(m.toolchains);
  GymBinding binding = MakeGym(m, bugs, opts.root, flags.workers);
  JobService &jobs = *binding.service;

  std::optional<RepairBackend> backend;
  if (!dataset.empty() && !cassette.empty()) {
    RepairBackend b;
    b.bugs = bugs;
    b.tree = flags.tree;
    b.provider = std::make_shared<ReplayProvider>(std::make_shared<const Cassette>(cassette));
    b.prices = prices.empty() ? PriceTable::FromJson(BuiltinPriceTable()) : PriceTable::Load(prices);
    b.runs_root = store / "runs";
    backend = std::move(b);
  }
  HttpService service(jobs, std::move(backend));
  int bound = service.Bind(host, port);
  service.Start();
  std::cerr << "listening on " << host << ":" << bound << "\n";
  int sig = 0;
  sigwait(&signals, &sig);
  std::cerr << "shutting down\n";
  service.Stop();
  jobs.Shutdown(false);
  return 0;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Kernel crash repair gym and repair pipeline"};
  app.require_subcommand(1);

  fs::path ingest_path;
  auto *ingest = app.add_subcommand("ingest", "Validate a bug corpus");
  ingest->add_option("path", ingest_path, "Corpus root")->required();

  fs::path parse_path;
  auto *parse = app.add_subcommand("parse", "Parse one crash report");
  parse->add_option("report", parse_path, "Console log or report file")->required();

  fs::path verify_path;
  GymFlags gym_flags;
  int vm_count = kDefaultVmCount;
  auto *verify = app.add_subcommand("verify", "Check that every baseline reproduces");
  verify->add_option("path", verify_path, "Corpus root")->required();
  verify->add_option("--gym", gym_flags.gym, "Remote gym URL");
  verify->add_option("--sim-script", gym_flags.sim_script, "Simulated executor script");
  verify->add_option("--toolchains", gym_flags.toolchains, "Toolchain table");
  verify->add_option("--store", gym_flags.store, "Job store of the in-process gym");
  verify->add_option("--vm-count", vm_count, "VMs per reproducer job");

  fs::path run_config;
  bool quiet = false;
  auto *run = app.add_subcommand("run", "Run a repair campaign");
  run->add_option("--config", run_config, "Run manifest")->required();
  run->add_flag("--quiet", quiet, "No progress lines");

  std::vector<fs::path> report_runs;
  std::string report_format = "md";
  fs::path report_out;
  auto *report = app.add_subcommand("report", "Tables over finished runs");
  report->add_option("--runs", report_runs, "Run directories or result ledgers")->required();
  report->add_option("--format", report_format, "md or csv")
      ->check(CLI::IsMember({"md", "csv"}));
  report->add_option("--out", report_out, "Write here instead of stdout");

  const char *env_addr = std::getenv("CRASHGYM_ADDR");
  std::string addr = env_addr ? env_addr : "127.0.0.1:8080";
  GymFlags serve_flags;
  int cores = 0;
  fs::path dataset, cassette, prices;
  auto *serve = app.add_subcommand("serve", "HTTP job service");
  serve->add_option("--addr", addr, "host:port (default $CRASHGYM_ADDR or 127.0.0.1:8080)");
  serve->add_option("--store", serve_flags.store, "Job store root");
  serve->add_option("--sim-script", serve_flags.sim_script, "Use the simulated executor");
  serve->add_option("--toolchains", serve_flags.toolchains, "Toolchain table");
  serve->add_option("--workers", serve_flags.workers, "Concurrent jobs");
  serve->add_option("--cores", cores, "Core budget (0 = all)");
  serve->add_option("--dataset", dataset, "Corpus for /v1/repair");
  serve->add_option("--tree", serve_flags.tree, "Source tree for /v1/repair");
  serve->add_option("--cassette", cassette, "Recorded model replies for /v1/repair");
  serve->add_option("--prices", prices, "Model price table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e, std::cerr, std::cerr);
    return 2;
  }

  try {
    if (*ingest) return Ingest(ingest_path);
    if (*parse) return Parse(parse_path);
    if (*verify) {
      gym_flags.tree = verify_path;
      return Verify(verify_path, gym_flags, vm_count);
    }
    if (*run) return Run(run_config, quiet);
    if (*report) return Report(report_runs, report_format, report_out);
    if (*serve) return Serve(addr, serve_flags, cores, dataset, cassette, prices);
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
