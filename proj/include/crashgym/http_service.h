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

#ifndef CRASHGYM_HTTP_SERVICE_H_
#define CRASHGYM_HTTP_SERVICE_H_

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "crashgym/apr_agents.h"
#include "crashgym/bug_dataset.h"
#include "crashgym/campaign.h"
#include "crashgym/error.h"
#include "crashgym/evaluation.h"
#include "crashgym/job_service.h"
#include "crashgym/llm_gateway.h"

namespace httplib {
class Server;
}

namespace crashgym {

// HTTP status for a fault: 400 bad input, 404 unknown id, 503 saturated,
// 500 otherwise.
int HttpStatusFor(ErrorCode code);

// What /v1/repair needs; the endpoint answers 404 for every bug when unset.
struct RepairBackend {
  std::vector<BugRecord> bugs;
  std::filesystem::path tree;
  std::shared_ptr<ChatProvider> provider;
  PriceTable prices;
  RepairOptions repair;
  std::filesystem::path runs_root;  // transcripts of each run
};

enum class RunState { kQueued, kRunning, kDone, kFailed };
std::string_view RunStateName(RunState state);

struct RepairRun {
  std::string run_id;
  std::string bug_id;
  std::string setup;
  RunState state = RunState::kQueued;
  std::optional<BugResult> result;
  std::string error;
};
Json ToJson(const RepairRun &run);

// JSON API over a job service:
//
//   POST /v1/jobs/build          BuildJob   -> 202 {"id"}
//   POST /v1/jobs/repro          ReproJob   -> 202 {"id"}
//   GET  /v1/jobs                           -> 200 [Job]
//   GET  /v1/jobs/<id>                      -> 200 Job
//   GET  /v1/jobs/<id>/logs?offset=N        -> 200 text
//   POST /v1/repair   {"bug_id", "agent", "setup"?} -> 202 {"run_id"}
//   GET  /v1/runs/<id>                      -> 200 RepairRun
//   GET  /health                            -> 200 {"status": "ok"}
//
// Errors carry {"code", "message"}.
class HttpService {
 public:
  explicit HttpService(JobService &jobs, std::optional<RepairBackend> repair = std::nullopt);
  ~HttpService();

  HttpService(const HttpService &) = delete;
  HttpService &operator=(const HttpService &) = delete;

  // Port 0 picks a free one. Returns the bound port; throws Error(kIo).
  int Bind(const std::string &host, int port);
  // Serves until Stop(). Requires Bind().
  void Listen();
  // Listen() on a background thread.
  void Start();
  // Stops accepting requests and waits for repair runs. Idempotent.
  void Stop();

  int port() const { return port_; }

 private:
  void Routes();
  std::string StartRepair(const Json &body);
  void ExecuteRepair(const std::string &run_id, AgentConfig config);

  JobService &jobs_;
  std::optional<RepairBackend> repair_;
  std::unique_ptr<Gateway> llm_;
  std::unique_ptr<TreeCache> trees_;
  std::unique_ptr<httplib::Server> server_;
  int port_ = 0;
  std::thread listener_;

  std::mutex mu_;
  std::map<std::string, RepairRun> runs_;
  std::vector<std::thread> run_threads_;
  int64_t next_run_ = 1;
  bool stopped_ = false;
};

}  // namespace crashgym

#endif  // CRASHGYM_HTTP_SERVICE_H_
