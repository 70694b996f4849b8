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

#ifndef CRASHGYM_JOB_SERVICE_H_
#define CRASHGYM_JOB_SERVICE_H_

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "crashgym/executor.h"
#include "crashgym/gym_types.h"
#include "crashgym/json_io.h"
#include "crashgym/toolchain.h"

namespace crashgym {

// Counting pool of CPU cores shared by builds and VMs.
class CorePool {
 public:
  explicit CorePool(int total) : total_(total), free_(total) {}
  // Blocks until `n` cores (clamped to the total) are free.
  int Acquire(int n);
  void Release(int n);
  int total() const { return total_; }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  int total_;
  int free_;
};

struct JobServiceOptions {
  std::filesystem::path root;  // holds `journal` and `jobs/<id>/`
  int workers = 2;
  int total_cores = 0;  // 0 = hardware concurrency
  size_t max_queue = 1024;
  ToolchainTable toolchains;
};

// Durable job queue and worker pool.
//
// Layout under `root`:
//   journal                append-only JSON lines (submit/start/finish)
//   jobs/<id>/meta         job specification
//   jobs/<id>/log          build or VM console output
//   jobs/<id>/result       terminal snapshot
//   jobs/<id>/artifacts/   executor outputs
//
// On start the journal is replayed: queued jobs are resumed, jobs that were
// running when the previous process died are finished as Failed. Ids are
// sequential ("job-000001") and never reused.
class JobService : public Gym {
 public:
  JobService(JobServiceOptions options, std::shared_ptr<BuildExecutor> build,
             std::shared_ptr<ReproExecutor> repro);
  ~JobService() override;

  JobService(const JobService &) = delete;
  JobService &operator=(const JobService &) = delete;

  // Throw Error(kValidation) for invalid jobs and Error(kQueueSaturated)
  // when max_queue jobs are already waiting.
  std::string SubmitBuild(const BuildJob &job) override;
  std::string SubmitRepro(const ReproJob &job) override;
  // Throw Error(kUnknownJob).
  Job Poll(const std::string &id) override;
  Job Wait(const std::string &id) override;
  // Nullopt when the job is still live after `timeout`.
  std::optional<Job> WaitFor(const std::string &id, std::chrono::milliseconds timeout);
  // Cancels a queued job; returns false when it already started.
  bool Cancel(const std::string &id);

  // Log bytes from `offset` on (empty past the end). Throws Error(kUnknownJob).
  std::string ReadLog(const std::string &id, uint64_t offset = 0) const;
  std::filesystem::path JobDir(const std::string &id) const;
  std::vector<Job> List() const;
  size_t queued() const;

  // Stops taking jobs. With `drain` every queued job still runs; otherwise
  // queued jobs stay in the journal for the next start. Running jobs always
  // finish. Idempotent.
  void Shutdown(bool drain);

 private:
  struct Entry {
    Job job;
    std::variant<BuildJob, ReproJob> spec;
  };

  void Recover();
  std::string Submit(JobKind kind, std::variant<BuildJob, ReproJob> spec);
  void WorkerLoop();
  void Execute(const std::string &id);
  void Finish(const std::string &id, JobState state,
              std::variant<std::monostate, BuildOutcome, ReproOutcome> result,
              std::string error);
  void Journal(const Json &line);
  static int64_t NowMs();

  JobServiceOptions options_;
  std::shared_ptr<BuildExecutor> build_;
  std::shared_ptr<ReproExecutor> repro_;
  CorePool cores_;

  mutable std::mutex mu_;
  std::condition_variable work_cv_;
  std::condition_variable done_cv_;
  std::map<std::string, Entry> jobs_;
  std::deque<std::string> queue_;
  int64_t next_seq_ = 1;
  int running_ = 0;
  bool stopping_ = false;
  bool drain_ = false;
  std::mutex journal_mu_;
  std::vector<std::thread> workers_;
};

}  // namespace crashgym

#endif  // CRASHGYM_JOB_SERVICE_H_
