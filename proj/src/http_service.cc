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

#include "crashgym/http_service.h"

#include <charconv>
#include <cstdio>

#include "crashgym/util.h"
#include "httplib.h"

namespace crashgym {

int HttpStatusFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kValidation:
    case ErrorCode::kMissingField:
    case ErrorCode::kMalformedDiff:
    case ErrorCode::kUnknownModel:
      return 400;
    case ErrorCode::kUnknownJob:
    case ErrorCode::kNotFound:
      return 404;
    case ErrorCode::kQueueSaturated:
      return 503;
    default:
      return 500;
  }
}

std::string_view RunStateName(RunState state) {
  switch (state) {
    case RunState::kQueued: return "Queued";
    case RunState::kRunning: return "Running";
    case RunState::kDone: return "Done";
    case RunState::kFailed: return "Failed";
  }
  return "Unknown";
}

Json ToJson(const RepairRun &run) {
  Json j = {{"run_id", run.run_id},
            {"bug_id", run.bug_id},
            {"setup", run.setup},
            {"state", std::string(RunStateName(run.state))}};
  j["result"] = run.result ? ToJson(*run.result) : Json(nullptr);
  if (!run.error.empty()) j["error"] = run.error;
  return j;
}

namespace {

void SendJson(httplib::Response &res, int status, const Json &body) {
  res.status = status;
  res.set_content(DumpJson(body), "application/json");
}

void SendError(httplib::Response &res, ErrorCode code, const std::string &message) {
  SendJson(res, HttpStatusFor(code),
           {{"code", std::string(ErrorCodeName(code))}, {"message", message}});
}

// Runs `fn`, turning faults into error responses.
template <typename Fn>
void Guard(httplib::Response &res, Fn &&fn) {
  try {
    WithJsonErrors([&] {
      fn();
      return 0;
    });
  } catch (const Error &e) {
    SendError(res, e.code(), e.detail());
  } catch (const std::exception &e) {
    SendError(res, ErrorCode::kInternal, e.what());
  }
}

Json Body(const httplib::Request &req) {
  return ParseJson(req.body);
}

}  // namespace

HttpService::HttpService(JobService &jobs, std::optional<RepairBackend> repair)
    : jobs_(jobs), repair_(std::move(repair)), server_(std::make_unique<httplib::Server>()) {
  if (repair_) {
    llm_ = std::make_unique<Gateway>(repair_->provider);
    trees_ = std::make_unique<TreeCache>(repair_->tree);
  }
  Routes();
}

HttpService::~HttpService() { Stop(); }

void HttpService::Routes() {
  httplib::Server &s = *server_;
  s.Post("/v1/jobs/build", [this](const httplib::Request &req, httplib::Response &res) {
    Guard(res, [&] {
      BuildJob job = BuildJobFromJson(Body(req));
      SendJson(res, 202, {{"id", jobs_.SubmitBuild(job)}});
    });
  });
  s.Post("/v1/jobs/repro", [this](const httplib::Request &req, httplib::Response &res) {
    Guard(res, [&] {
      ReproJob job = ReproJobFromJson(Body(req));
      SendJson(res, 202, {{"id", jobs_.SubmitRepro(job)}});
    });
  });
  s.Get("/v1/jobs", [this](const httplib::Request &, httplib::Response &res) {
    Guard(res, [&] {
      Json list = Json::array();
      for (const auto &job : jobs_.List()) list.push_back(ToJson(job));
      SendJson(res, 200, list);
    });
  });
  s.Get(R"(/v1/jobs/([A-Za-z0-9_-]+))",
        [this](const httplib::Request &req, httplib::Response &res) {
          Guard(res, [&] { SendJson(res, 200, ToJson(jobs_.Poll(req.matches[1]))); });
        });
  s.Get(R"(/v1/jobs/([A-Za-z0-9_-]+)/logs)",
        [this](const httplib::Request &req, httplib::Response &res) {
          Guard(res, [&] {
            uint64_t offset = 0;
            if (req.has_param("offset")) {
              std::string v = req.get_param_value("offset");
              auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), offset);
              if (ec != std::errc() || ptr != v.data() + v.size()) {
                throw Error(ErrorCode::kValidation, "offset: not a byte count: " + v);
              }
            }
            res.status = 200;
            res.set_content(jobs_.ReadLog(req.matches[1], offset), "text/plain");
          });
        });
  s.Post("/v1/repair", [this](const httplib::Request &req, httplib::Response &res) {
    Guard(res, [&] { SendJson(res, 202, {{"run_id", StartRepair(Body(req))}}); });
  });
  s.Get(R"(/v1/runs/([A-Za-z0-9_-]+))",
        [this](const httplib::Request &req, httplib::Response &res) {
          Guard(res, [&] {
            std::lock_guard lock(mu_);
            auto it = runs_.find(req.matches[1]);
            if (it == runs_.end()) {
              throw Error(ErrorCode::kNotFound, "no run " + std::string(req.matches[1]));
            }
            SendJson(res, 200, ToJson(it->second));
          });
        });
  s.Get("/health", [this](const httplib::Request &, httplib::Response &res) {
    SendJson(res, 200, {{"status", "ok"}, {"queued", jobs_.queued()}});
  });
}

std::string HttpService::StartRepair(const Json &body) {
  if (!body.is_object() || !body.contains("bug_id")) {
    throw Error(ErrorCode::kMissingField, "bug_id");
  }
  std::string bug_id = body.at("bug_id").get<std::string>();
  AgentConfig config = AgentConfigFromJson(body.value("agent", Json::object()));
  if (!repair_) throw Error(ErrorCode::kNotFound, "no dataset loaded for repair runs");
  bool known = false;
  for (const auto &b : repair_->bugs) known = known || b.bug_id == bug_id;
  if (!known) throw Error(ErrorCode::kNotFound, "bug " + bug_id + " not in dataset");

  std::lock_guard lock(mu_);
  if (stopped_) throw Error(ErrorCode::kQueueSaturated, "service is stopping");
  char id[32];
  std::snprintf(id, sizeof(id), "run-%06lld", static_cast<long long>(next_run_++));
  RepairRun run;
  run.run_id = id;
  run.bug_id = bug_id;
  run.setup = body.value("setup", DefaultSetupName(config));
  runs_[run.run_id] = run;
  run_threads_.emplace_back([this, rid = run.run_id, config] { ExecuteRepair(rid, config); });
  return run.run_id;
}

void HttpService::ExecuteRepair(const std::string &run_id, AgentConfig config) {
  const BugRecord *bug = nullptr;
  std::string setup;
  {
    std::lock_guard lock(mu_);
    RepairRun &run = runs_.at(run_id);
    run.state = RunState::kRunning;
    setup = run.setup;
    for (const auto &b : repair_->bugs) {
      if (b.bug_id == run.bug_id) bug = &b;
    }
  }
  RepairOptions options = repair_->repair;
  options.run_id = run_id;
  try {
    auto logs = RepairLoop(config, *bug, jobs_, *llm_, trees_->For(bug->bug_id), options);
    if (!repair_->runs_root.empty()) {
      auto dir = repair_->runs_root / run_id;
      std::filesystem::create_directories(dir);
      for (const auto &log : logs) {
        WriteFile(dir / ("attempt-" + std::to_string(log.attempt_index) + ".txt"),
                  log.transcript.Render());
      }
    }
    BugResult result = MakeBugResult(bug->bug_id, setup, config, logs, &repair_->prices);
    std::lock_guard lock(mu_);
    RepairRun &run = runs_.at(run_id);
    run.result = std::move(result);
    run.state = RunState::kDone;
  } catch (const std::exception &e) {
    std::lock_guard lock(mu_);
    RepairRun &run = runs_.at(run_id);
    run.state = RunState::kFailed;
    run.error = e.what();
  }
}

int HttpService::Bind(const std::string &host, int port) {
  port_ = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
  if (port_ <= 0) {
    throw Error(ErrorCode::kIo, "cannot bind " + host + ":" + std::to_string(port));
  }
  return port_;
}

void HttpService::Listen() { server_->listen_after_bind(); }

void HttpService::Start() {
  listener_ = std::thread([this] { Listen(); });
  server_->wait_until_ready();
}

void HttpService::Stop() {
  std::vector<std::thread> threads;
  {
    std::lock_guard lock(mu_);
    if (stopped_ && run_threads_.empty() && !listener_.joinable()) return;
    stopped_ = true;
    threads.swap(run_threads_);
  }
  server_->stop();
  if (listener_.joinable()) listener_.join();
  for (auto &t : threads) t.join();
}

}  // namespace crashgym
