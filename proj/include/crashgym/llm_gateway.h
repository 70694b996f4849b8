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

#ifndef CRASHGYM_LLM_GATEWAY_H_
#define CRASHGYM_LLM_GATEWAY_H_

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

namespace crashgym {

enum class Role { kSystem, kUser, kAssistant };
std::string_view RoleName(Role role);
Role ParseRole(std::string_view name);

struct ChatMessage {
  Role role = Role::kUser;
  std::string content;
  bool operator==(const ChatMessage &) const = default;
};

struct Usage {
  int64_t prompt_tokens = 0;
  int64_t completion_tokens = 0;

  Usage &operator+=(const Usage &o) {
    prompt_tokens += o.prompt_tokens;
    completion_tokens += o.completion_tokens;
    return *this;
  }
  friend Usage operator+(Usage a, const Usage &b) { return a += b; }
  bool operator==(const Usage &) const = default;
};

struct ChatParams {
  double temperature = 0.0;
  int max_tokens = 4096;
  std::optional<int64_t> seed;
};

struct ChatRequest {
  std::string model;
  ChatParams params;
  std::vector<ChatMessage> messages;
};

struct ChatResponse {
  ChatMessage reply;
  Usage usage;
};

// Canonical (sorted-key, compact) JSON of a request and its SHA-256; the
// cassette key.
std::string CanonicalRequestJson(const ChatRequest &request);
std::string RequestDigest(const ChatRequest &request);

// US dollars as an exact integer count of 1e-12 USD. Token counts times
// prices quoted in micro-dollars per million tokens land exactly here.
class Usd {
 public:
  constexpr Usd() = default;
  static constexpr Usd FromPico(int64_t pico) { return Usd(pico); }
  // Parses "0.17", "2.5", "12" (at most 12 decimals). Throws Error(kValidation).
  static Usd Parse(std::string_view decimal);

  int64_t pico() const { return pico_; }
  // Fixed decimals, round half up.
  std::string ToString(int decimals = 2) const;

  Usd &operator+=(Usd o) {
    pico_ += o.pico_;
    return *this;
  }
  friend Usd operator+(Usd a, Usd b) { return a += b; }
  auto operator<=>(const Usd &) const = default;

 private:
  constexpr explicit Usd(int64_t pico) : pico_(pico) {}
  int64_t pico_ = 0;
};

struct ModelPrice {
  int64_t input_micro_per_mtok = 0;  // micro-USD per million prompt tokens
  int64_t output_micro_per_mtok = 0;
};

class PriceTable {
 public:
  // Prices in USD per million tokens as decimal strings. Negative prices
  // throw Error(kValidation).
  void Set(std::string model, std::string_view input_per_mtok,
           std::string_view output_per_mtok);
  // Throws Error(kUnknownModel).
  const ModelPrice &Get(std::string_view model) const;
  bool Has(std::string_view model) const;

  // {"model": {"input_per_mtok": "2.50", "output_per_mtok": "10.00"}, ...}
  static PriceTable FromJson(std::string_view json_text);
  static PriceTable Load(const std::filesystem::path &path);

 private:
  std::map<std::string, ModelPrice, std::less<>> prices_;
};

// Default price list shipped with the library (PriceTable::FromJson form).
std::string_view BuiltinPriceTable();

// prompt * input_price / 1e6 + completion * output_price / 1e6, exact.
Usd CostOf(const Usage &usage, std::string_view model, const PriceTable &table);

class ChatProvider {
 public:
  virtual ~ChatProvider() = default;
  virtual ChatResponse Complete(const ChatRequest &request) = 0;
};

// Provider backed by a function; used for stubs and scripted models.
class CallbackProvider : public ChatProvider {
 public:
  using Fn = std::function<ChatResponse(const ChatRequest &)>;
  explicit CallbackProvider(Fn fn) : fn_(std::move(fn)) {}
  ChatResponse Complete(const ChatRequest &request) override {
    return fn_(request);
  }

 private:
  Fn fn_;
};

struct CassetteEntry {
  std::string digest;
  ChatRequest request;
  ChatResponse response;
};

// Append-only JSON-lines store of recorded exchanges keyed by request
// digest. Lookups may run concurrently; appends are serialized.
class Cassette {
 public:
  Cassette() = default;
  // Missing file = empty cassette; new entries are appended to `path`.
  explicit Cassette(std::filesystem::path path);

  std::optional<ChatResponse> Find(const std::string &digest) const;
  void Append(const ChatRequest &request, const ChatResponse &response);
  size_t size() const;

 private:
  std::optional<std::filesystem::path> path_;
  mutable std::shared_mutex mu_;
  std::map<std::string, ChatResponse> entries_;
};

// Serves recorded replies; unseen requests throw Error(kReplayMiss).
class ReplayProvider : public ChatProvider {
 public:
  explicit ReplayProvider(std::shared_ptr<const Cassette> cassette)
      : cassette_(std::move(cassette)) {}
  ChatResponse Complete(const ChatRequest &request) override;

 private:
  std::shared_ptr<const Cassette> cassette_;
};

// Forwards to `inner` and records every exchange.
class RecordingProvider : public ChatProvider {
 public:
  RecordingProvider(std::shared_ptr<ChatProvider> inner,
                    std::shared_ptr<Cassette> cassette)
      : inner_(std::move(inner)), cassette_(std::move(cassette)) {}
  ChatResponse Complete(const ChatRequest &request) override;

 private:
  std::shared_ptr<ChatProvider> inner_;
  std::shared_ptr<Cassette> cassette_;
};

// OpenAI-style /v1/chat/completions endpoint over HTTP(S). 429 and 5xx
// responses and transport failures are retryable ProviderErrors.
class OpenAiCompatibleProvider : public ChatProvider {
 public:
  OpenAiCompatibleProvider(std::string base_url, std::string api_key,
                           int timeout_sec = 600);
  ChatResponse Complete(const ChatRequest &request) override;

 private:
  std::string base_url_;
  std::string api_key_;
  int timeout_sec_;
};

// Builds the JSON body for a chat completion request.
std::string OpenAiRequestBody(const ChatRequest &request);
// Parses a chat completion response body. Throws ProviderError on shape errors.
ChatResponse ParseOpenAiResponse(std::string_view body);

// Counting semaphore admitting waiters strictly in arrival order.
class FifoSemaphore {
 public:
  explicit FifoSemaphore(int permits) : permits_(permits) {}
  void Acquire();
  void Release();

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  int permits_;
  uint64_t next_ticket_ = 0;
  uint64_t serving_ = 0;
};

struct Transcript {
  std::vector<ChatMessage> messages;
  // Plain-text rendering ("### role" blocks) for persisting.
  std::string Render() const;
};

struct CallContext {
  std::string run_id;
  std::string bug_id;
};

struct GatewayOptions {
  int max_retries = 3;
  std::chrono::milliseconds backoff{500};
  int max_concurrent = 4;
  // Usage ledger (JSON lines); nothing is written when unset.
  std::optional<std::filesystem::path> usage_ledger;
  // Injected for tests; defaults to std::this_thread::sleep_for.
  std::function<void(std::chrono::milliseconds)> sleep;
};

// Provider-agnostic chat entry point: bounded retries of retryable provider
// errors, FIFO admission, usage metering and the usage ledger.
class Gateway {
 public:
  Gateway(std::shared_ptr<ChatProvider> provider, GatewayOptions options = {});

  // Appends the request messages and the reply to `transcript` when given.
  ChatResponse Chat(const std::string &model,
                    const std::vector<ChatMessage> &messages,
                    const ChatParams &params = {},
                    const CallContext &context = {},
                    Transcript *transcript = nullptr);

  Usage total_usage() const;
  int64_t calls() const;
  int64_t provider_attempts() const;

 private:
  std::shared_ptr<ChatProvider> provider_;
  GatewayOptions options_;
  FifoSemaphore admission_;
  mutable std::mutex mu_;
  Usage total_;
  int64_t calls_ = 0;
  int64_t attempts_ = 0;
};

}  // namespace crashgym

#endif  // CRASHGYM_LLM_GATEWAY_H_
