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

#include "crashgym/llm_gateway.h"

#include <algorithm>
#include <thread>

#include "crashgym/error.h"
#include "crashgym/util.h"
#include "httplib.h"
#include "json.hpp"

namespace crashgym {
namespace {

using json = nlohmann::json;

std::string Dump(const json &j) {
  return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

json MessagesJson(const std::vector<ChatMessage> &messages) {
  json arr = json::array();
  for (const auto &m : messages) {
    arr.push_back({{"role", RoleName(m.role)}, {"content", m.content}});
  }
  return arr;
}

json RequestJson(const ChatRequest &r) {
  json params = {{"temperature", r.params.temperature},
                 {"max_tokens", r.params.max_tokens}};
  if (r.params.seed) params["seed"] = *r.params.seed;
  return {{"model", r.model},
          {"params", params},
          {"messages", MessagesJson(r.messages)}};
}

// "2.50" -> 2500000 at 6 decimals.
int64_t ParseScaled(std::string_view text, int scale) {
  std::string_view s = Trim(text);
  bool negative = false;
  if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }
  auto dot = s.find('.');
  std::string_view whole = s.substr(0, dot);
  std::string_view frac = dot == std::string_view::npos ? "" : s.substr(dot + 1);
  auto digits = [](std::string_view d) {
    return std::all_of(d.begin(), d.end(),
                       [](char c) { return c >= '0' && c <= '9'; });
  };
  if ((whole.empty() && frac.empty()) || !digits(whole) || !digits(frac) ||
      static_cast<int>(frac.size()) > scale) {
    throw Error(ErrorCode::kValidation,
                "not a decimal with at most " + std::to_string(scale) +
                    " places: '" + std::string(text) + "'");
  }
  int64_t value = 0;
  for (char c : whole) value = value * 10 + (c - '0');
  for (int i = 0; i < scale; ++i) {
    value = value * 10 + (i < static_cast<int>(frac.size()) ? frac[i] - '0' : 0);
  }
  return negative ? -value : value;
}

std::string PriceString(const json &v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number()) return v.dump();
  throw Error(ErrorCode::kValidation, "price must be a string or number");
}

}  // namespace

std::string_view RoleName(Role role) {
  switch (role) {
    case Role::kSystem: return "system";
    case Role::kUser: return "user";
    case Role::kAssistant: return "assistant";
  }
  return "user";
}

Role ParseRole(std::string_view name) {
  if (name == "system") return Role::kSystem;
  if (name == "assistant") return Role::kAssistant;
  if (name == "user") return Role::kUser;
  throw Error(ErrorCode::kValidation, "unknown role " + std::string(name));
}

std::string CanonicalRequestJson(const ChatRequest &request) {
  return Dump(RequestJson(request));
}

std::string RequestDigest(const ChatRequest &request) {
  return Sha256Hex(CanonicalRequestJson(request));
}

Usd Usd::Parse(std::string_view decimal) {
  return Usd(ParseScaled(decimal, 12));
}

std::string Usd::ToString(int decimals) const {
  decimals = std::clamp(decimals, 0, 12);
  int64_t unit = 1;
  for (int i = 0; i < 12 - decimals; ++i) unit *= 10;
  bool negative = pico_ < 0;
  // Round half up on the magnitude.
  int64_t magnitude = negative ? -pico_ : pico_;
  int64_t scaled = (magnitude + unit / 2) / unit;
  int64_t pow10 = 1;
  for (int i = 0; i < decimals; ++i) pow10 *= 10;
  std::string out = (negative && scaled != 0 ? "-" : "") +
                    std::to_string(scaled / pow10);
  if (decimals > 0) {
    std::string frac = std::to_string(scaled % pow10);
    out += "." + std::string(decimals - frac.size(), '0') + frac;
  }
  return out;
}

void PriceTable::Set(std::string model, std::string_view input_per_mtok,
                     std::string_view output_per_mtok) {
  ModelPrice p{ParseScaled(input_per_mtok, 6), ParseScaled(output_per_mtok, 6)};
  if (p.input_micro_per_mtok < 0 || p.output_micro_per_mtok < 0) {
    throw Error(ErrorCode::kValidation, "negative price for " + model);
  }
  prices_[std::move(model)] = p;
}

const ModelPrice &PriceTable::Get(std::string_view model) const {
  auto it = prices_.find(model);
  if (it == prices_.end()) {
    throw Error(ErrorCode::kUnknownModel, std::string(model));
  }
  return it->second;
}

bool PriceTable::Has(std::string_view model) const {
  return prices_.find(model) != prices_.end();
}

PriceTable PriceTable::FromJson(std::string_view json_text) {
  PriceTable table;
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception &e) {
    throw Error(ErrorCode::kValidation, std::string("price table: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::kValidation, "price table: expected an object");
  for (const auto &[model, entry] : j.items()) {
    if (!entry.is_object() || !entry.contains("input_per_mtok") ||
        !entry.contains("output_per_mtok")) {
      throw Error(ErrorCode::kValidation, "price table: bad entry for " + model);
    }
    table.Set(model, PriceString(entry["input_per_mtok"]),
              PriceString(entry["output_per_mtok"]));
  }
  return table;
}

PriceTable PriceTable::Load(const std::filesystem::path &path) {
  return FromJson(ReadFile(path));
}

Usd CostOf(const Usage &usage, std::string_view model, const PriceTable &table) {
  const ModelPrice &p = table.Get(model);
  // micro-USD per 1e6 tokens times tokens = 1e-12 USD.
  return Usd::FromPico(usage.prompt_tokens * p.input_micro_per_mtok +
                       usage.completion_tokens * p.output_micro_per_mtok);
}

Cassette::Cassette(std::filesystem::path path) : path_(std::move(path)) {
  std::error_code ec;
  if (!std::filesystem::exists(*path_, ec)) return;
  std::string text = ReadFile(*path_);
  int lineno = 0;
  for (auto line : SplitLines(text)) {
    ++lineno;
    if (Trim(line).empty()) continue;
    try {
      json j = json::parse(line);
      ChatResponse resp;
      resp.reply = {ParseRole(j.at("reply").at("role").get<std::string>()),
                    j.at("reply").at("content").get<std::string>()};
      resp.usage = {j.at("usage").at("prompt_tokens").get<int64_t>(),
                    j.at("usage").at("completion_tokens").get<int64_t>()};
      entries_.emplace(j.at("digest").get<std::string>(), std::move(resp));
    } catch (const json::exception &e) {
      throw Error(ErrorCode::kValidation, path_->string() + ":" +
                                              std::to_string(lineno) + ": " +
                                              e.what());
    }
  }
}

std::optional<ChatResponse> Cassette::Find(const std::string &digest) const {
  std::shared_lock lock(mu_);
  auto it = entries_.find(digest);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void Cassette::Append(const ChatRequest &request, const ChatResponse &response) {
  std::string digest = RequestDigest(request);
  std::unique_lock lock(mu_);
  if (!entries_.emplace(digest, response).second) return;
  if (path_) {
    json j = {{"digest", digest},
              {"request", RequestJson(request)},
              {"reply",
               {{"role", RoleName(response.reply.role)},
                {"content", response.reply.content}}},
              {"usage",
               {{"prompt_tokens", response.usage.prompt_tokens},
                {"completion_tokens", response.usage.completion_tokens}}}};
    AppendFile(*path_, Dump(j) + "\n");
  }
}

size_t Cassette::size() const {
  std::shared_lock lock(mu_);
  return entries_.size();
}

ChatResponse ReplayProvider::Complete(const ChatRequest &request) {
  std::string digest = RequestDigest(request);
  if (auto hit = cassette_->Find(digest)) return *hit;
  throw Error(ErrorCode::kReplayMiss,
              "no recorded reply for request " + digest.substr(0, 16));
}

ChatResponse RecordingProvider::Complete(const ChatRequest &request) {
  ChatResponse response = inner_->Complete(request);
  cassette_->Append(request, response);
  return response;
}

OpenAiCompatibleProvider::OpenAiCompatibleProvider(std::string base_url,
                                                   std::string api_key,
                                                   int timeout_sec)
    : base_url_(std::move(base_url)),
      api_key_(std::move(api_key)),
      timeout_sec_(timeout_sec) {}

std::string OpenAiRequestBody(const ChatRequest &request) {
  json body = {{"model", request.model},
               {"messages", MessagesJson(request.messages)},
               {"temperature", request.params.temperature},
               {"max_tokens", request.params.max_tokens}};
  if (request.params.seed) body["seed"] = *request.params.seed;
  return Dump(body);
}

ChatResponse ParseOpenAiResponse(std::string_view body) {
  try {
    json j = json::parse(body);
    ChatResponse r;
    const json &msg = j.at("choices").at(0).at("message");
    r.reply = {Role::kAssistant,
               msg.at("content").is_null() ? "" : msg.at("content").get<std::string>()};
    if (j.contains("usage")) {
      r.usage.prompt_tokens = j["usage"].value("prompt_tokens", int64_t{0});
      r.usage.completion_tokens = j["usage"].value("completion_tokens", int64_t{0});
    }
    return r;
  } catch (const json::exception &e) {
    throw ProviderError(200, false, std::string("bad response body: ") + e.what());
  }
}

ChatResponse OpenAiCompatibleProvider::Complete(const ChatRequest &request) {
  httplib::Client client(base_url_);
  client.set_read_timeout(timeout_sec_, 0);
  client.set_connection_timeout(30, 0);
  httplib::Headers headers;
  if (!api_key_.empty()) {
    headers.emplace("Authorization", "Bearer " + api_key_);
  }
  auto res = client.Post("/v1/chat/completions", headers,
                         OpenAiRequestBody(request), "application/json");
  if (!res) {
    throw ProviderError(0, true, "transport: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    bool retryable = res->status == 429 || res->status >= 500;
    throw ProviderError(res->status, retryable,
                        std::string(Tail(res->body, 500)));
  }
  return ParseOpenAiResponse(res->body);
}

void FifoSemaphore::Acquire() {
  std::unique_lock lock(mu_);
  uint64_t ticket = next_ticket_++;
  cv_.wait(lock, [&] { return ticket == serving_ && permits_ > 0; });
  --permits_;
  ++serving_;
  cv_.notify_all();
}

void FifoSemaphore::Release() {
  {
    std::lock_guard lock(mu_);
    ++permits_;
  }
  cv_.notify_all();
}

std::string Transcript::Render() const {
  std::string out;
  for (const auto &m : messages) {
    out += "### ";
    out += RoleName(m.role);
    out += "\n";
    out += m.content;
    if (m.content.empty() || m.content.back() != '\n') out += "\n";
    out += "\n";
  }
  return out;
}

Gateway::Gateway(std::shared_ptr<ChatProvider> provider, GatewayOptions options)
    : provider_(std::move(provider)),
      options_(std::move(options)),
      admission_(std::max(options_.max_concurrent, 1)) {
  if (!options_.sleep) {
    options_.sleep = [](std::chrono::milliseconds d) {
      std::this_thread::sleep_for(d);
    };
  }
}

ChatResponse Gateway::Chat(const std::string &model,
                           const std::vector<ChatMessage> &messages,
                           const ChatParams &params, const CallContext &context,
                           Transcript *transcript) {
  ChatRequest request{model, params, messages};
  admission_.Acquire();
  struct Releaser {
    FifoSemaphore &s;
    ~Releaser() { s.Release(); }
  } releaser{admission_};

  ChatResponse response;
  for (int attempt = 0;; ++attempt) {
    {
      std::lock_guard lock(mu_);
      ++attempts_;
    }
    try {
      response = provider_->Complete(request);
      break;
    } catch (const ProviderError &e) {
      if (!e.retryable() || attempt >= options_.max_retries) throw;
      options_.sleep(options_.backoff * (1 << std::min(attempt, 10)));
    }
  }

  {
    std::lock_guard lock(mu_);
    total_ += response.usage;
    ++calls_;
  }
  if (options_.usage_ledger) {
    json line = {{"run_id", context.run_id},
                 {"bug_id", context.bug_id},
                 {"model", model},
                 {"prompt_tokens", response.usage.prompt_tokens},
                 {"completion_tokens", response.usage.completion_tokens}};
    AppendFile(*options_.usage_ledger, Dump(line) + "\n");
  }
  if (transcript) {
    auto &t = transcript->messages;
    bool is_prefix = t.size() <= messages.size() &&
                     std::equal(t.begin(), t.end(), messages.begin());
    auto from = is_prefix ? messages.begin() + static_cast<long>(t.size())
                          : messages.begin();
    t.insert(t.end(), from, messages.end());
    t.push_back(response.reply);
  }
  return response;
}

Usage Gateway::total_usage() const {
  std::lock_guard lock(mu_);
  return total_;
}

int64_t Gateway::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

int64_t Gateway::provider_attempts() const {
  std::lock_guard lock(mu_);
  return attempts_;
}

}  // namespace crashgym
