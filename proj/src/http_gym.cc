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

#include "crashgym/http_gym.h"

#include <thread>

#include "crashgym/error.h"
#include "httplib.h"

namespace crashgym {

namespace {

[[noreturn]] void ThrowFromResponse(const httplib::Result &res, const std::string &what) {
  if (!res) {
    throw Error(ErrorCode::kIo, what + ": " + httplib::to_string(res.error()));
  }
  try {
    Json body = Json::parse(res->body);
    if (body.is_object() && body.contains("code")) {
      throw Error(ParseErrorCode(body.at("code").get<std::string>()),
                  body.value("message", std::string()));
    }
  } catch (const Json::exception &) {
  }
  throw Error(ErrorCode::kIo, what + ": HTTP " + std::to_string(res->status));
}

}  // namespace

HttpGym::HttpGym(std::string base_url, std::chrono::milliseconds poll_interval)
    : base_url_(std::move(base_url)), poll_interval_(poll_interval) {}

std::string HttpGym::SubmitBuild(const BuildJob &job) {
  httplib::Client cli(base_url_);
  auto res = cli.Post("/v1/jobs/build", DumpJson(ToJson(job)), "application/json");
  if (!res || res->status != 202) ThrowFromResponse(res, "submit build");
  return WithJsonErrors([&] { return Json::parse(res->body).at("id").get<std::string>(); });
}

std::string HttpGym::SubmitRepro(const ReproJob &job) {
  httplib::Client cli(base_url_);
  auto res = cli.Post("/v1/jobs/repro", DumpJson(ToJson(job)), "application/json");
  if (!res || res->status != 202) ThrowFromResponse(res, "submit repro");
  return WithJsonErrors([&] { return Json::parse(res->body).at("id").get<std::string>(); });
}

Job HttpGym::Poll(const std::string &id) {
  httplib::Client cli(base_url_);
  auto res = cli.Get("/v1/jobs/" + id);
  if (!res || res->status != 200) ThrowFromResponse(res, "poll " + id);
  return WithJsonErrors([&] { return JobFromJson(Json::parse(res->body)); });
}

Job HttpGym::Wait(const std::string &id) {
  while (true) {
    Job job = Poll(id);
    if (IsTerminal(job.state)) return job;
    std::this_thread::sleep_for(poll_interval_);
  }
}

std::string HttpGym::ReadLog(const std::string &id, uint64_t offset) {
  httplib::Client cli(base_url_);
  auto res = cli.Get("/v1/jobs/" + id + "/logs?offset=" + std::to_string(offset));
  if (!res || res->status != 200) ThrowFromResponse(res, "log " + id);
  return res->body;
}

}  // namespace crashgym
