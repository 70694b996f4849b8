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

#include "crashgym/job_service.h"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "crashgym/error.h"
#include "crashgym/util.h"

namespace crashgym {
namespace {

namespace fs = std::filesystem;

std::string FormatId(int64_t seq) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "job-%06lld", static_cast<long long>(seq));
  return buf;
}

int64_t ParseSeq(const std::string &id) {
  if (!StartsWith(id, "job-")) return 0;
  try {
    return std::stoll(id.substr(4));
  } catch (const std::exception &) {
    return 0;
  }
}

// Serialized appends to one job's log file.
class LogFile {
 public:
  explicit LogFile(const fs::path &path) : out_(path, std::ios::binary | std::ios::app) {}
  void Write(std::string_view chunk) {
    std::lock_guard lock(mu_);
    out_.write(chunk.data(), static_cast<std::streamsize>(chunk.size()));
    out_.flush();
  }

 private:
  std::mutex mu_;
  std::ofstream out_;
};

}  // namespace

int CorePool::Acquire(int n) {
  n = std::clamp(n, 1, total_);
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return free_ >= n; });
  free_ -= n;
  return n;
}

void CorePool::Release(int n) {
  {
    std::lock_guard lock(mu_);
    free_ += n;
  }
  cv_.notify_all();
}

JobService::JobService(JobServiceOptions options,
                       std::shared_ptr<BuildExecutor> build,
                       std::shared_ptr<ReproExecutor> repro)
    : options_(std::move(options)),
      build_(std::move(build)),
      repro_(std::move(repro)),
      cores_(options_.total_cores > 0
                 ? options_.total_cores
                 : std::max(2, static_cast<int>(std::thread::hardware_concurrency()))) {
  fs::create_directories(options_.root / "jobs");
  Recover();
  for (int i = 0; i < std::max(1, options_.workers); ++i) {
    workers_.emplace_back([this] { WorkerLoop(); });
  }
}

JobService::~JobService() { Shutdown(false); }

int64_t JobService::NowMs() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

fs::path JobService::JobDir(const std::string &id) const {
  return options_.root / "jobs" / id;
}

void JobService::Journal(const Json &line) {
  std::lock_guard lock(journal_mu_);
  AppendFile(options_.root / "journal", DumpJson(line) + "\n");
}

void JobService::Recover() {
  fs::path journal = options_.root / "journal";
  if (!fs::exists(journal)) return;
  std::vector<std::string> order;
  std::string text = ReadFile(journal);
  // Terminate a torn final line so later appends start on a fresh one.
  if (!text.empty() && text.back() != '\n') AppendFile(journal, "\n");
  for (auto line : SplitLines(text)) {
    if (Trim(line).empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::exception &) {
      continue;  // torn final write
    }
    std::string op = j.value("op", "");
    std::string id = j.value("id", "");
    next_seq_ = std::max(next_seq_, ParseSeq(id) + 1);
    if (op == "submit") {
      Entry e;
      e.job.id = id;
      e.job.kind = j.value("kind", "build") == "build" ? JobKind::kBuild : JobKind::kRepro;
      e.job.submitted_ms = j.value("ts", int64_t{0});
      e.job.log_ref = "jobs/" + id + "/log";
      try {
        Json meta = ParseJson(ReadFile(JobDir(id) / "meta"));
        if (e.job.kind == JobKind::kBuild) {
          e.spec = BuildJobFromJson(meta);
        } else {
          e.spec = ReproJobFromJson(meta);
        }
      } catch (const Error &err) {
        e.job.state = JobState::kFailed;
        e.job.error = std::string("unreadable job spec: ") + err.what();
      }
      jobs_.emplace(id, std::move(e));
      order.push_back(id);
    } else if (auto it = jobs_.find(id); it != jobs_.end()) {
      Job &job = it->second.job;
      if (op == "start") {
        job.state = JobState::kRunning;
        job.started_ms = j.value("ts", int64_t{0});
      } else if (op == "finish") {
        job.state = ParseJobState(j.value("state", "Failed"));
        job.finished_ms = j.value("ts", int64_t{0});
        job.error = j.value("error", "");
        fs::path result = JobDir(id) / "result";
        if (fs::exists(result)) {
          try {
            job.result = JobFromJson(ParseJson(ReadFile(result))).result;
          } catch (const Error &) {
          }
        }
      }
    }
  }
  for (const auto &id : order) {
    Job &job = jobs_.at(id).job;
    if (job.state == JobState::kRunning) {
      Finish(id, JobState::kFailed, std::monostate{},
             "interrupted by service restart");
    } else if (job.state == JobState::kFailed && !job.finished_ms) {
      Finish(id, JobState::kFailed, std::monostate{}, job.error);
    } else if (job.state == JobState::kQueued) {
      queue_.push_back(id);
    }
  }
}

std::string JobService::Submit(JobKind kind, std::variant<BuildJob, ReproJob> spec) {
  std::unique_lock lock(mu_);
  if (stopping_) throw Error(ErrorCode::kQueueSaturated, "service is shutting down");
  if (queue_.size() >= options_.max_queue) {
    throw Error(ErrorCode::kQueueSaturated,
                std::to_string(queue_.size()) + " jobs already queued");
  }
  std::string id = FormatId(next_seq_++);
  Entry e;
  e.job.id = id;
  e.job.kind = kind;
  e.job.submitted_ms = NowMs();
  e.job.log_ref = "jobs/" + id + "/log";
  e.spec = std::move(spec);

  fs::create_directories(JobDir(id) / "artifacts");
  Json meta = std::visit([](const auto &s) { return ToJson(s); }, e.spec);
  WriteFileAtomic(JobDir(id) / "meta", DumpJson(meta, 2) + "\n");
  WriteFile(JobDir(id) / "log", "");
  Journal({{"op", "submit"}, {"id", id}, {"kind", JobKindName(kind)},
           {"ts", e.job.submitted_ms}});
  jobs_.emplace(id, std::move(e));
  queue_.push_back(id);
  lock.unlock();
  work_cv_.notify_one();
  return id;
}

std::string JobService::SubmitBuild(const BuildJob &job) {
  ValidateBuildJob(job);
  return Submit(JobKind::kBuild, job);
}

std::string JobService::SubmitRepro(const ReproJob &job) {
  ValidateReproJob(job);
  return Submit(JobKind::kRepro, job);
}

Job JobService::Poll(const std::string &id) {
  std::lock_guard lock(mu_);
  auto it = jobs_.find(id);
  if (it == jobs_.end()) throw Error(ErrorCode::kUnknownJob, id);
  return it->second.job;
}

Job JobService::Wait(const std::string &id) {
  std::unique_lock lock(mu_);
  auto it = jobs_.find(id);
  if (it == jobs_.end()) throw Error(ErrorCode::kUnknownJob, id);
  done_cv_.wait(lock, [&] { return IsTerminal(it->second.job.state); });
  return it->second.job;
}

std::optional<Job> JobService::WaitFor(const std::string &id,
                                       std::chrono::milliseconds timeout) {
  std::unique_lock lock(mu_);
  auto it = jobs_.find(id);
  if (it == jobs_.end()) throw Error(ErrorCode::kUnknownJob, id);
  if (!done_cv_.wait_for(lock, timeout,
                         [&] { return IsTerminal(it->second.job.state); })) {
    return std::nullopt;
  }
  return it->second.job;
}

bool JobService::Cancel(const std::string &id) {
  {
    std::lock_guard lock(mu_);
    auto it = jobs_.find(id);
    if (it == jobs_.end()) throw Error(ErrorCode::kUnknownJob, id);
    if (it->second.job.state != JobState::kQueued) return false;
    queue_.erase(std::remove(queue_.begin(), queue_.end(), id), queue_.end());
  }
  Finish(id, JobState::kCancelled, std::monostate{}, "cancelled before start");
  return true;
}

std::string JobService::ReadLog(const std::string &id, uint64_t offset) const {
  {
    std::lock_guard lock(mu_);
    if (!jobs_.count(id)) throw Error(ErrorCode::kUnknownJob, id);
  }
  std::ifstream in(JobDir(id) / "log", std::ios::binary);
  if (!in) return "";
  in.seekg(0, std::ios::end);
  auto size = static_cast<uint64_t>(in.tellg());
  if (offset >= size) return "";
  in.seekg(static_cast<std::streamoff>(offset));
  std::string out(size - offset, '\0');
  in.read(out.data(), static_cast<std::streamsize>(out.size()));
  out.resize(static_cast<size_t>(in.gcount()));
  return out;
}

std::vector<Job> JobService::List() const {
  std::lock_guard lock(mu_);
  std::vector<Job> out;
  for (const auto &[id, e] : jobs_) out.push_back(e.job);
  return out;
}

size_t JobService::queued() const {
  std::lock_guard lock(mu_);
  return queue_.size();
}

void JobService::Shutdown(bool drain) {
  {
    std::lock_guard lock(mu_);
    if (stopping_ && workers_.empty()) return;
    stopping_ = true;
    drain_ = drain;
  }
  work_cv_.notify_all();
  for (auto &t : workers_) {
    if (t.joinable()) t.join();
  }
  workers_.clear();
}

void JobService::WorkerLoop() {
  while (true) {
    std::string id;
    {
      std::unique_lock lock(mu_);
      work_cv_.wait(lock, [&] { return !queue_.empty() || stopping_; });
      if (queue_.empty() || (stopping_ && !drain_)) return;
      id = queue_.front();
      queue_.pop_front();
      Job &job = jobs_.at(id).job;
      job.state = JobState::kRunning;
      job.started_ms = NowMs();
      ++running_;
      Journal({{"op", "start"}, {"id", id}, {"ts", *job.started_ms}});
    }
    Execute(id);
    std::lock_guard lock(mu_);
    --running_;
  }
}

void JobService::Execute(const std::string &id) {
  std::variant<BuildJob, ReproJob> spec;
  {
    std::lock_guard lock(mu_);
    spec = jobs_.at(id).spec;
  }
  LogFile logfile(JobDir(id) / "log");
  LogSink log = [&logfile](std::string_view chunk) { logfile.Write(chunk); };
  try {
    if (const auto *b = std::get_if<BuildJob>(&spec)) {
      int held = cores_.Acquire(b->cores);
      BuildOutcome outcome = RunBuild(*b, options_.toolchains, *build_, id, log,
                                       (JobDir(id) / "artifacts").string());
      cores_.Release(held);
      if (auto *ce = std::get_if<CompileError>(&outcome)) ce->log_ref = "jobs/" + id + "/log";
      JobState state = std::holds_alternative<BuildTimeout>(outcome)
                           ? JobState::kTimedOut
                           : JobState::kDone;
      Finish(id, state, outcome, "");
    } else {
      const ReproJob &r = std::get<ReproJob>(spec);
      int per_vm = std::clamp(r.per_vm.cores, 1, cores_.total());
      VmSlots slots{[&] { cores_.Acquire(per_vm); }, [&] { cores_.Release(per_vm); }};
      ReproOutcome outcome =
          RunRepro(r, *repro_, log, std::max(1, cores_.total() / per_vm), slots);
      Finish(id, JobState::kDone, outcome, "");
    }
  } catch (const std::exception &e) {
    log(std::string("job failed: ") + e.what() + "\n");
    Finish(id, JobState::kFailed, std::monostate{}, e.what());
  }
}

void JobService::Finish(const std::string &id, JobState state,
                        std::variant<std::monostate, BuildOutcome, ReproOutcome> result,
                        std::string error) {
  Job snapshot;
  {
    std::lock_guard lock(mu_);
    Job &job = jobs_.at(id).job;
    job.state = state;
    job.finished_ms = NowMs();
    job.result = std::move(result);
    job.error = std::move(error);
    snapshot = job;
  }
  // The result file lands before the journal line that makes it visible
  // to recovery.
  fs::create_directories(JobDir(id));
  WriteFileAtomic(JobDir(id) / "result", DumpJson(ToJson(snapshot), 2) + "\n");
  Journal({{"op", "finish"}, {"id", id}, {"state", JobStateName(state)},
           {"ts", *snapshot.finished_ms}, {"error", snapshot.error}});
  done_cv_.notify_all();
}

}  // namespace crashgym
