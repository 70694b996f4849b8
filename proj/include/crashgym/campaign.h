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

#ifndef CRASHGYM_CAMPAIGN_H_
#define CRASHGYM_CAMPAIGN_H_

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "crashgym/apr_agents.h"
#include "crashgym/bug_dataset.h"
#include "crashgym/evaluation.h"
#include "crashgym/gym_types.h"
#include "crashgym/job_service.h"
#include "crashgym/json_io.h"
#include "crashgym/llm_gateway.h"
#include "crashgym/sim_executor.h"

namespace crashgym {

// One APR campaign. Text form is `key: value` lines; relative paths resolve
// against the manifest's directory.
struct RunManifest {
  std::string run_id;
  std::filesystem::path dataset;
  std::filesystem::path tree;  // `<tree>/<bug_id>/` is used when present
  std::filesystem::path output;

  std::string executor = "simulated";  // simulated | real | remote
  std::optional<std::filesystem::path> sim_script;
  std::string gym;  // base URL for `remote`
  std::optional<std::filesystem::path> toolchains;
  std::filesystem::path work_root;  // real executors
  std::filesystem::path rootfs;
  std::filesystem::path ssh_key;

  std::string provider = "replay";  // replay | record | openai
  std::optional<std::filesystem::path> cassette;
  std::string api_base = "https://api.openai.com";
  std::string api_key_env = "OPENAI_API_KEY";
  std::optional<std::filesystem::path> prices;

  std::string setup;  // report row name; derived from the agent when empty
  AgentConfig agent;
  RepairOptions repair;
  std::vector<std::string> bugs;  // empty = whole dataset
  int limit = 0;                  // first N bugs by id, 0 = all
  int workers = 1;
};

// Throws Error(kValidation) / Error(kMissingField).
RunManifest ParseRunManifest(std::string_view text,
                             const std::filesystem::path &base_dir);
RunManifest LoadRunManifest(const std::filesystem::path &path);
Json ToJson(const RunManifest &manifest);

Json ToJson(const AgentConfig &config);
// Missing keys keep their defaults. Throws Error(kValidation).
AgentConfig AgentConfigFromJson(const Json &j);

// "SimpleAgent", "SimpleAgent-nobic", "SimpleAgent+Feedback",
// "ExplorationAgent", "RawDiff".
std::string DefaultSetupName(const AgentConfig &config);

// Default toolchain table next to the executable's data directory.
ToolchainTable LoadToolchains(const std::optional<std::filesystem::path> &path);

// Gym and executors for a manifest. `store` holds the job store of an
// in-process gym.
struct GymBinding {
  std::shared_ptr<SimulatedExecutor> sim;
  std::unique_ptr<Gym> gym;
  JobService *service = nullptr;  // set for in-process gyms
};
GymBinding MakeGym(const RunManifest &manifest, const std::vector<BugRecord> &bugs,
                   const std::filesystem::path &store, int workers);

std::shared_ptr<ChatProvider> MakeProvider(const RunManifest &manifest);

// Source tree for one bug: `<root>/<bug_id>` when it exists, else `root`.
class TreeCache {
 public:
  explicit TreeCache(std::filesystem::path root) : root_(std::move(root)) {}
  const SourceTree &For(const std::string &bug_id);
  std::filesystem::path PathFor(const std::string &bug_id) const;

 private:
  std::filesystem::path root_;
  std::mutex mu_;
  std::map<std::filesystem::path, std::unique_ptr<SourceTree>> trees_;
};

struct CampaignProgress {
  int total = 0;
  int done = 0;
  int solved = 0;
};

struct CampaignResult {
  std::vector<BugResult> results;  // sorted by bug id
  EvaluationSummary summary;
};

// Runs the repair loop over the selected bugs and writes run.json,
// results.jsonl, usage.jsonl, transcripts/ and report.{md,csv} under
// manifest.output. Report files depend only on the results. `provider`
// replaces the one named by the manifest when set.
CampaignResult RunCampaign(const RunManifest &manifest,
                           const std::function<void(const CampaignProgress &)>
                               &progress = nullptr,
                           std::shared_ptr<ChatProvider> provider = nullptr);

// Report of one run directory: tables plus the attempt histogram.
std::string RenderRunReport(const std::vector<BugResult> &results, ReportFormat format);

// "1: 34 (23.77%), 2: 8 (5.59%), ... cumulative 37.76%".
std::string RenderAttemptHistogram(const std::map<int, int64_t> &histogram, int64_t n);

}  // namespace crashgym

#endif  // CRASHGYM_CAMPAIGN_H_
