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

#include "crashgym/campaign.h"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdlib>
#include <thread>

#include "crashgym/error.h"
#include "crashgym/http_gym.h"
#include "crashgym/real_executors.h"
#include "crashgym/util.h"

namespace crashgym {
namespace fs = std::filesystem;

namespace {

int ParseInt(const std::string &key, std::string_view value) {
  int out = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw Error(ErrorCode::kValidation, key + ": not an integer: " + std::string(value));
  }
  return out;
}

bool ParseBool(const std::string &key, std::string_view value) {
  std::string v = ToLower(value);
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  throw Error(ErrorCode::kValidation, key + ": not a boolean: " + std::string(value));
}

double ParseDouble(const std::string &key, std::string_view value) {
  try {
    size_t used = 0;
    double d = std::stod(std::string(value), &used);
    if (used == value.size()) return d;
  } catch (const std::exception &) {
  }
  throw Error(ErrorCode::kValidation, key + ": not a number: " + std::string(value));
}

fs::path Resolve(const fs::path &base, std::string_view value) {
  fs::path p(value);
  return p.is_absolute() ? p : (base / p).lexically_normal();
}

std::vector<std::string> SplitList(std::string_view value) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : value) {
    if (c == ',' || c == ' ' || c == '\t') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

}  // namespace

RunManifest ParseRunManifest(std::string_view text, const fs::path &base_dir) {
  RunManifest m;
  bool have_tree = false;
  int lineno = 0;
  for (auto raw : SplitLines(text)) {
    ++lineno;
    std::string_view line = Trim(raw);
    if (line.empty() || line.front() == '#') continue;
    size_t colon = line.find(':');
    if (colon == std::string_view::npos) {
      throw Error(ErrorCode::kValidation,
                  "manifest line " + std::to_string(lineno) + ": expected `key: value`");
    }
    std::string key(Trim(line.substr(0, colon)));
    std::string_view value = Trim(line.substr(colon + 1));
    AgentConfig &a = m.agent;
    if (key == "run_id") m.run_id = value;
    else if (key == "dataset") m.dataset = Resolve(base_dir, value);
    else if (key == "tree") m.tree = Resolve(base_dir, value), have_tree = true;
    else if (key == "output") m.output = Resolve(base_dir, value);
    else if (key == "executor") m.executor = value;
    else if (key == "sim_script") m.sim_script = Resolve(base_dir, value);
    else if (key == "gym") m.gym = value;
    else if (key == "toolchains") m.toolchains = Resolve(base_dir, value);
    else if (key == "work_root") m.work_root = Resolve(base_dir, value);
    else if (key == "rootfs") m.rootfs = Resolve(base_dir, value);
    else if (key == "ssh_key") m.ssh_key = Resolve(base_dir, value);
    else if (key == "provider") m.provider = value;
    else if (key == "cassette") m.cassette = Resolve(base_dir, value);
    else if (key == "api_base") m.api_base = value;
    else if (key == "api_key_env") m.api_key_env = value;
    else if (key == "prices") m.prices = Resolve(base_dir, value);
    else if (key == "setup") m.setup = value;
    else if (key == "agent") a.kind = ParseAgentKind(value);
    else if (key == "model") a.model = value;
    else if (key == "use_bic") a.use_bic = ParseBool(key, value);
    else if (key == "max_attempts") a.max_attempts = ParseInt(key, value);
    else if (key == "exploration_rounds") a.exploration_rounds = ParseInt(key, value);
    else if (key == "context_budget") a.context_budget = ParseInt(key, value);
    else if (key == "raw_diff") a.raw_diff = ParseBool(key, value);
    else if (key == "temperature") a.params.temperature = ParseDouble(key, value);
    else if (key == "max_tokens") a.params.max_tokens = ParseInt(key, value);
    else if (key == "seed") a.params.seed = ParseInt(key, value);
    else if (key == "bugs") m.bugs = SplitList(value);
    else if (key == "limit") m.limit = ParseInt(key, value);
    else if (key == "workers") m.workers = ParseInt(key, value);
    else if (key == "source") m.repair.source = value;
    else if (key == "build_cores") m.repair.build_cores = ParseInt(key, value);
    else if (key == "build_timeout_sec") m.repair.build_timeout_sec = ParseInt(key, value);
    else if (key == "vm_count") m.repair.vm_count = ParseInt(key, value);
    else if (key == "repro_timeout_sec") m.repair.repro_timeout_sec = ParseInt(key, value);
    else
      throw Error(ErrorCode::kValidation,
                  "manifest line " + std::to_string(lineno) + ": unknown key '" + key + "'");
  }
  if (m.run_id.empty()) throw Error(ErrorCode::kMissingField, "manifest: run_id");
  if (m.dataset.empty()) throw Error(ErrorCode::kMissingField, "manifest: dataset");
  if (m.output.empty()) throw Error(ErrorCode::kMissingField, "manifest: output");
  if (!have_tree) throw Error(ErrorCode::kMissingField, "manifest: tree");
  if (m.executor != "simulated" && m.executor != "real" && m.executor != "remote") {
    throw Error(ErrorCode::kValidation, "manifest: unknown executor '" + m.executor + "'");
  }
  if (m.executor == "simulated" && !m.sim_script) {
    throw Error(ErrorCode::kMissingField, "manifest: sim_script (simulated executor)");
  }
  if (m.executor == "remote" && m.gym.empty()) {
    throw Error(ErrorCode::kMissingField, "manifest: gym (remote executor)");
  }
  if (m.provider != "replay" && m.provider != "record" && m.provider != "openai") {
    throw Error(ErrorCode::kValidation, "manifest: unknown provider '" + m.provider + "'");
  }
  if (m.provider != "openai" && !m.cassette) {
    throw Error(ErrorCode::kMissingField, "manifest: cassette (" + m.provider + " provider)");
  }
  if (m.workers < 1) throw Error(ErrorCode::kValidation, "manifest: workers must be >= 1");
  if (m.limit < 0) throw Error(ErrorCode::kValidation, "manifest: limit must be >= 0");
  ValidateConfig(m.agent);
  if (m.setup.empty()) m.setup = DefaultSetupName(m.agent);
  return m;
}

RunManifest LoadRunManifest(const fs::path &path) {
  return ParseRunManifest(ReadFile(path), fs::absolute(path).parent_path());
}

Json ToJson(const AgentConfig &c) {
  Json j = {{"kind", std::string(AgentKindName(c.kind))},
            {"use_bic", c.use_bic},
            {"model", c.model},
            {"max_attempts", c.max_attempts},
            {"exploration_rounds", c.exploration_rounds},
            {"context_budget", c.context_budget},
            {"raw_diff", c.raw_diff},
            {"temperature", c.params.temperature},
            {"max_tokens", c.params.max_tokens}};
  if (c.params.seed) j["seed"] = *c.params.seed;
  return j;
}

AgentConfig AgentConfigFromJson(const Json &j) {
  return WithJsonErrors([&] {
    if (!j.is_object()) throw Error(ErrorCode::kValidation, "agent config: expected an object");
    AgentConfig c;
    if (j.contains("kind")) c.kind = ParseAgentKind(j.at("kind").get<std::string>());
    c.use_bic = j.value("use_bic", c.use_bic);
    c.model = j.value("model", c.model);
    c.max_attempts = j.value("max_attempts", c.max_attempts);
    c.exploration_rounds = j.value("exploration_rounds", c.exploration_rounds);
    c.context_budget = j.value("context_budget", c.context_budget);
    c.raw_diff = j.value("raw_diff", c.raw_diff);
    c.params.temperature = j.value("temperature", c.params.temperature);
    c.params.max_tokens = j.value("max_tokens", c.params.max_tokens);
    if (j.contains("seed")) c.params.seed = j.at("seed").get<int64_t>();
    ValidateConfig(c);
    return c;
  });
}

Json ToJson(const RunManifest &m) {
  Json j = {{"run_id", m.run_id},
            {"setup", m.setup},
            {"dataset", m.dataset.string()},
            {"tree", m.tree.string()},
            {"executor", m.executor},
            {"provider", m.provider},
            {"agent", ToJson(m.agent)},
            {"bugs", m.bugs},
            {"limit", m.limit},
            {"workers", m.workers},
            {"source", m.repair.source},
            {"build_cores", m.repair.build_cores},
            {"build_timeout_sec", m.repair.build_timeout_sec},
            {"vm_count", m.repair.vm_count},
            {"repro_timeout_sec", m.repair.repro_timeout_sec}};
  if (m.sim_script) j["sim_script"] = m.sim_script->string();
  if (m.cassette) j["cassette"] = m.cassette->string();
  if (!m.gym.empty()) j["gym"] = m.gym;
  return j;
}

std::string DefaultSetupName(const AgentConfig &c) {
  if (c.raw_diff) return "RawDiff";
  if (c.kind == AgentKind::kExploration) return "ExplorationAgent";
  std::string name = "SimpleAgent";
  if (!c.use_bic) name += "-nobic";
  if (c.max_attempts > 1) name += "+Feedback";
  return name;
}

ToolchainTable LoadToolchains(const std::optional<fs::path> &path) {
  return path ? ToolchainTable::Load(*path) : ToolchainTable::Parse(BuiltinToolchainTable());
}

const SourceTree &TreeCache::For(const std::string &bug_id) {
  fs::path path = PathFor(bug_id);
  std::lock_guard lock(mu_);
  auto &slot = trees_[path];
  if (!slot) slot = std::make_unique<SourceTree>(path);
  return *slot;
}

fs::path TreeCache::PathFor(const std::string &bug_id) const {
  std::error_code ec;
  fs::path per_bug = root_ / bug_id;
  if (!bug_id.empty() && fs::is_directory(per_bug, ec)) return per_bug;
  return root_;
}

GymBinding MakeGym(const RunManifest &m, const std::vector<BugRecord> &bugs,
                   const fs::path &store, int workers) {
  GymBinding b;
  if (m.executor == "remote") {
    b.gym = std::make_unique<HttpGym>(m.gym);
    return b;
  }
  JobServiceOptions opts;
  opts.root = store;
  opts.workers = workers;
  opts.toolchains = LoadToolchains(m.toolchains);
  std::shared_ptr<BuildExecutor> build;
  std::shared_ptr<ReproExecutor> repro;
  if (m.executor == "simulated") {
    b.sim = std::make_shared<SimulatedExecutor>(ParseSimScript(ReadFile(*m.sim_script)));
    for (const auto &bug : bugs) b.sim->SetReport(bug.bug_id, bug.crash_report);
    auto trees = std::make_shared<TreeCache>(m.tree);
    b.sim->SetTreeResolver([trees](const std::string &bug) -> std::optional<fs::path> {
      return trees->PathFor(bug);
    });
    build = b.sim;
    repro = b.sim;
  } else {
    DockerBuildOptions dopts;
    dopts.work_root = m.work_root.empty() ? store / "work" : m.work_root;
    QemuReproOptions qopts;
    qopts.work_root = dopts.work_root;
    qopts.rootfs = m.rootfs;
    qopts.ssh_key = m.ssh_key;
    build = std::make_shared<DockerBuildExecutor>(dopts);
    repro = std::make_shared<QemuReproExecutor>(qopts);
  }
  auto service = std::make_unique<JobService>(std::move(opts), build, repro);
  b.service = service.get();
  b.gym = std::move(service);
  return b;
}

std::shared_ptr<ChatProvider> MakeProvider(const RunManifest &m) {
  if (m.provider == "replay") {
    if (!fs::exists(*m.cassette)) {
      throw Error(ErrorCode::kUnreadablePath, "cassette " + m.cassette->string());
    }
    return std::make_shared<ReplayProvider>(std::make_shared<const Cassette>(*m.cassette));
  }
  const char *key = std::getenv(m.api_key_env.c_str());
  auto live = std::make_shared<OpenAiCompatibleProvider>(m.api_base, key ? key : "");
  if (m.provider == "openai") return live;
  return std::make_shared<RecordingProvider>(live, std::make_shared<Cassette>(*m.cassette));
}

namespace {

std::vector<BugRecord> SelectBugs(const RunManifest &m, std::vector<BugRecord> all) {
  std::vector<BugRecord> out;
  if (m.bugs.empty()) {
    out = std::move(all);
  } else {
    for (const auto &id : m.bugs) {
      auto it = std::find_if(all.begin(), all.end(),
                             [&](const BugRecord &r) { return r.bug_id == id; });
      if (it == all.end()) throw Error(ErrorCode::kNotFound, "bug " + id + " not in dataset");
      out.push_back(*it);
    }
    std::sort(out.begin(), out.end(),
              [](const BugRecord &a, const BugRecord &b) { return a.bug_id < b.bug_id; });
  }
  if (m.limit > 0 && out.size() > static_cast<size_t>(m.limit)) out.resize(m.limit);
  return out;
}

void WriteAttemptFiles(const fs::path &dir, const std::vector<AttemptLog> &logs) {
  fs::create_directories(dir);
  for (const auto &log : logs) {
    std::string stem = "attempt-" + std::to_string(log.attempt_index);
    WriteFile(dir / (stem + ".txt"), log.transcript.Render());
    if (log.patch) WriteFile(dir / (stem + ".patch"), log.patch->diff);
  }
}

}  // namespace

std::string RenderAttemptHistogram(const std::map<int, int64_t> &histogram, int64_t n) {
  std::string out;
  int64_t cumulative = 0;
  for (const auto &[k, count] : histogram) {
    if (!out.empty()) out += ", ";
    out += std::to_string(k) + ": " + std::to_string(count) + " (" +
           FormatPercent({count, n}) + "%)";
    cumulative += count;
  }
  out += "; cumulative " + FormatPercent({cumulative, n}) + "%";
  return out;
}

std::string RenderRunReport(const std::vector<BugResult> &results, ReportFormat format) {
  EvaluationSummary s = Summarize(results);
  std::string out = EmitReport({s}, format);
  if (format == ReportFormat::kMarkdown && !results.empty() &&
      results.front().max_attempts > 1) {
    out += "\nSolved at attempt: " + RenderAttemptHistogram(s.attempt_histogram, s.n_bugs) +
           "\n";
  }
  return out;
}

CampaignResult RunCampaign(const RunManifest &m,
                           const std::function<void(const CampaignProgress &)> &progress,
                           std::shared_ptr<ChatProvider> provider) {
  std::vector<BugRecord> bugs = SelectBugs(m, LoadDataset(m.dataset));
  if (fs::exists(m.output / "results.jsonl")) {
    throw Error(ErrorCode::kValidation,
                "output " + m.output.string() + " already holds a finished run");
  }
  fs::create_directories(m.output);
  if (fs::exists(m.output / "run.json")) {
    Json prev = ParseJson(ReadFile(m.output / "run.json"));
    if (prev.value("run_id", "") != m.run_id) {
      throw Error(ErrorCode::kValidation, "output " + m.output.string() +
                                              " belongs to run " +
                                              prev.value("run_id", std::string("?")));
    }
  }
  WriteFileAtomic(m.output / "run.json", DumpJson(ToJson(m), 2) + "\n");
  fs::remove(m.output / "usage.jsonl");

  PriceTable prices = m.prices ? PriceTable::Load(*m.prices)
                               : PriceTable::FromJson(BuiltinPriceTable());
  GymBinding gym = MakeGym(m, bugs, m.output / "gym", std::max(2, m.workers));
  GatewayOptions gopts;
  gopts.usage_ledger = m.output / "usage.jsonl";
  gopts.max_concurrent = std::max(1, m.workers);
  Gateway llm(provider ? std::move(provider) : MakeProvider(m), gopts);
  TreeCache trees(m.tree);
  RepairOptions repair = m.repair;
  repair.run_id = m.run_id;

  std::vector<BugResult> results(bugs.size());
  std::atomic<size_t> next{0};
  std::mutex progress_mu;
  CampaignProgress state{static_cast<int>(bugs.size()), 0, 0};
  std::exception_ptr failure;
  auto worker = [&] {
    while (true) {
      size_t i = next.fetch_add(1);
      if (i >= bugs.size()) return;
      const BugRecord &bug = bugs[i];
      try {
        auto logs = RepairLoop(m.agent, bug, *gym.gym, llm, trees.For(bug.bug_id), repair);
        WriteAttemptFiles(m.output / "transcripts" / bug.bug_id, logs);
        results[i] = MakeBugResult(bug.bug_id, m.setup, m.agent, logs, &prices);
      } catch (...) {
        std::lock_guard lock(progress_mu);
        if (!failure) failure = std::current_exception();
        next = bugs.size();
        return;
      }
      std::lock_guard lock(progress_mu);
      ++state.done;
      if (results[i].solved) ++state.solved;
      if (progress) progress(state);
    }
  };
  std::vector<std::thread> threads;
  for (int t = 0; t < std::min<int>(m.workers, std::max<size_t>(1, bugs.size())); ++t) {
    threads.emplace_back(worker);
  }
  for (auto &t : threads) t.join();
  if (failure) std::rethrow_exception(failure);

  std::string ledger;
  for (const auto &r : results) ledger += DumpJson(ToJson(r)) + "\n";
  WriteFileAtomic(m.output / "results.jsonl", ledger);
  CampaignResult out;
  out.summary = Summarize(results);
  WriteFileAtomic(m.output / "report.md", RenderRunReport(results, ReportFormat::kMarkdown));
  WriteFileAtomic(m.output / "report.csv", RenderRunReport(results, ReportFormat::kCsv));
  out.results = std::move(results);
  return out;
}

}  // namespace crashgym
