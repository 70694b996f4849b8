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

#include <gtest/gtest.h>
#include <unistd.h>

#include <atomic>
#include <thread>

#include "crashgym/error.h"
#include "crashgym/json_io.h"
#include "crashgym/util.h"
#include "httplib.h"

namespace crashgym {
namespace {

namespace fs = std::filesystem;

fs::path Scratch(const std::string &name) {
  fs::path p = fs::temp_directory_path() /
              ("crashgym-llm-" + std::to_string(::getpid()) + "-" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

ChatRequest Request(const std::string &text) {
  return {"gpt-4o", {0.0, 512, 7}, {{Role::kSystem, "sys"}, {Role::kUser, text}}};
}

ChatResponse Reply(const std::string &text, int64_t p = 10, int64_t c = 5) {
  return {{Role::kAssistant, text}, {p, c}};
}

TEST(Usd, ParseAndFormat) {
  EXPECT_EQ(Usd::Parse("0.17").pico(), 170000000000);
  EXPECT_EQ(Usd::Parse("12").pico(), 12000000000000);
  EXPECT_EQ(Usd::Parse("2.5").ToString(), "2.50");
  EXPECT_EQ(Usd::FromPico(5000000000).ToString(), "0.01");   // 0.005 -> 0.01
  EXPECT_EQ(Usd::FromPico(4999999999).ToString(), "0.00");
  EXPECT_EQ(Usd::Parse("0.123456789012").ToString(12), "0.123456789012");
  EXPECT_THROW(Usd::Parse("abc"), Error);
  EXPECT_THROW(Usd::Parse("0.1234567890123"), Error);
}

TEST(Usd, CostIsExact) {
  PriceTable t;
  t.Set("m", "2.50", "10.00");
  // 1234 * 2.5 / 1e6 + 567 * 10 / 1e6 = 0.003085 + 0.00567
  Usd c = CostOf({1234, 567}, "m", t);
  EXPECT_EQ(c.pico(), 8755000000);
  EXPECT_EQ(c.ToString(6), "0.008755");
  // Summing many small costs loses nothing.
  Usd sum;
  for (int i = 0; i < 1000; ++i) sum += CostOf({1, 1}, "m", t);
  EXPECT_EQ(sum.pico(), int64_t{1000} * (2500000 + 10000000));
  try {
    CostOf({1, 1}, "unknown", t);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnknownModel);
  }
  EXPECT_THROW(t.Set("neg", "-1", "1"), Error);
}

TEST(PriceTable, BuiltinParses) {
  PriceTable t = PriceTable::FromJson(BuiltinPriceTable());
  EXPECT_TRUE(t.Has("gpt-4o"));
  EXPECT_EQ(t.Get("gpt-4o").input_micro_per_mtok, 2500000);
  EXPECT_THROW(PriceTable::FromJson("{\"m\": 3}"), Error);
}

TEST(Cassette, DigestIsCanonical) {
  ChatRequest a = Request("hello");
  ChatRequest b = a;
  EXPECT_EQ(RequestDigest(a), RequestDigest(b));
  b.params.seed = 8;
  EXPECT_NE(RequestDigest(a), RequestDigest(b));
  Json j = ParseJson(CanonicalRequestJson(a));
  EXPECT_EQ(DumpJson(j), CanonicalRequestJson(a));
  EXPECT_EQ(RequestDigest(a), Sha256Hex(CanonicalRequestJson(a)));
}

TEST(Cassette, RecordThenReplay) {
  fs::path dir = Scratch("cassette");
  auto tape = std::make_shared<Cassette>(dir / "c.jsonl");
  int calls = 0;
  auto inner = std::make_shared<CallbackProvider>([&](const ChatRequest &r) {
    ++calls;
    return Reply("echo " + r.messages.back().content);
  });
  RecordingProvider rec(inner, tape);
  EXPECT_EQ(rec.Complete(Request("one")).reply.content, "echo one");
  EXPECT_EQ(rec.Complete(Request("two")).reply.content, "echo two");
  EXPECT_EQ(calls, 2);
  EXPECT_EQ(tape->size(), 2u);

  auto loaded = std::make_shared<const Cassette>(dir / "c.jsonl");
  EXPECT_EQ(loaded->size(), 2u);
  ReplayProvider replay(loaded);
  ChatResponse r = replay.Complete(Request("two"));
  EXPECT_EQ(r.reply.content, "echo two");
  EXPECT_EQ(r.usage, (Usage{10, 5}));
  try {
    replay.Complete(Request("three"));
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kReplayMiss);
  }
}

TEST(Gateway, RetriesRetryableErrorsWithBackoff) {
  int failures_left = 2;
  auto provider = std::make_shared<CallbackProvider>([&](const ChatRequest &) {
    if (failures_left-- > 0) throw ProviderError(429, true, "slow down");
    return Reply("ok");
  });
  std::vector<std::chrono::milliseconds> sleeps;
  GatewayOptions opts;
  opts.max_retries = 3;
  opts.backoff = std::chrono::milliseconds(100);
  opts.sleep = [&](std::chrono::milliseconds d) { sleeps.push_back(d); };
  Gateway gw(provider, opts);
  EXPECT_EQ(gw.Chat("gpt-4o", {{Role::kUser, "x"}}).reply.content, "ok");
  EXPECT_EQ(gw.provider_attempts(), 3);
  EXPECT_EQ(gw.calls(), 1);
  ASSERT_EQ(sleeps.size(), 2u);
  EXPECT_EQ(sleeps[0].count(), 100);
  EXPECT_EQ(sleeps[1].count(), 200);
}

TEST(Gateway, GivesUpAfterMaxRetries) {
  auto provider = std::make_shared<CallbackProvider>(
      [](const ChatRequest &) -> ChatResponse { throw ProviderError(503, true, "down"); });
  GatewayOptions opts;
  opts.max_retries = 2;
  opts.sleep = [](std::chrono::milliseconds) {};
  Gateway gw(provider, opts);
  try {
    gw.Chat("gpt-4o", {{Role::kUser, "x"}});
    FAIL();
  } catch (const ProviderError &e) {
    EXPECT_EQ(e.status(), 503);
  }
  EXPECT_EQ(gw.provider_attempts(), 3);
  EXPECT_EQ(gw.calls(), 0);
}

TEST(Gateway, NonRetryableFailsImmediately) {
  auto provider = std::make_shared<CallbackProvider>(
      [](const ChatRequest &) -> ChatResponse { throw ProviderError(400, false, "bad"); });
  GatewayOptions opts;
  opts.sleep = [](std::chrono::milliseconds) { FAIL() << "no sleep expected"; };
  Gateway gw(provider, opts);
  EXPECT_THROW(gw.Chat("gpt-4o", {{Role::kUser, "x"}}), ProviderError);
  EXPECT_EQ(gw.provider_attempts(), 1);
}

TEST(Gateway, MetersUsageAndWritesLedger) {
  fs::path dir = Scratch("ledger");
  auto provider = std::make_shared<CallbackProvider>(
      [](const ChatRequest &r) { return Reply("r", 100 + r.messages.size(), 7); });
  GatewayOptions opts;
  opts.usage_ledger = dir / "usage.jsonl";
  Gateway gw(provider, opts);
  Transcript t;
  std::vector<ChatMessage> msgs = {{Role::kSystem, "s"}, {Role::kUser, "u"}};
  auto r1 = gw.Chat("gpt-4o", msgs, {}, {"run-1", "bug-1"}, &t);
  msgs.push_back(r1.reply);
  msgs.push_back({Role::kUser, "again"});
  gw.Chat("gpt-4o", msgs, {}, {"run-1", "bug-1"}, &t);
  EXPECT_EQ(gw.total_usage(), (Usage{102 + 104, 14}));
  // The transcript holds each message once.
  ASSERT_EQ(t.messages.size(), 5u);
  EXPECT_EQ(t.messages[3].content, "again");
  EXPECT_NE(t.Render().find("### assistant\nr\n"), std::string::npos);
  const std::string text = ReadFile(dir / "usage.jsonl");
  auto lines = SplitLines(text);
  ASSERT_EQ(lines.size(), 2u);
  Json first = ParseJson(lines[0]);
  EXPECT_EQ(first["bug_id"], "bug-1");
  EXPECT_EQ(first["prompt_tokens"], 102);
}

TEST(Gateway, AdmissionIsBounded) {
  std::atomic<int> inside{0}, peak{0};
  auto provider = std::make_shared<CallbackProvider>([&](const ChatRequest &) {
    int now = ++inside;
    int p = peak.load();
    while (now > p && !peak.compare_exchange_weak(p, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
    --inside;
    return Reply("ok");
  });
  GatewayOptions opts;
  opts.max_concurrent = 3;
  Gateway gw(provider, opts);
  std::vector<std::thread> threads;
  for (int i = 0; i < 16; ++i) {
    threads.emplace_back([&] { gw.Chat("gpt-4o", {{Role::kUser, "x"}}); });
  }
  for (auto &th : threads) th.join();
  EXPECT_LE(peak.load(), 3);
  EXPECT_EQ(gw.calls(), 16);
}

TEST(FifoSemaphore, ServesInArrivalOrder) {
  FifoSemaphore sem(1);
  sem.Acquire();
  std::vector<int> order;
  std::mutex mu;
  std::vector<std::thread> threads;
  for (int i = 0; i < 5; ++i) {
    threads.emplace_back([&, i] {
      sem.Acquire();
      {
        std::lock_guard lock(mu);
        order.push_back(i);
      }
      sem.Release();
    });
    // Give each waiter time to take its ticket before the next arrives.
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  sem.Release();
  for (auto &th : threads) th.join();
  EXPECT_EQ(order, (std::vector<int>{0, 1, 2, 3, 4}));
}

class FakeOpenAi : public ::testing::Test {
 protected:
  void SetUp() override {
    server_.Post("/v1/chat/completions", [this](const httplib::Request &req,
                                                httplib::Response &res) {
      last_auth_ = req.get_header_value("Authorization");
      last_body_ = req.body;
      res.status = status_;
      res.set_content(body_, "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  void TearDown() override {
    server_.stop();
    thread_.join();
  }
  std::string Url() const { return "http://127.0.0.1:" + std::to_string(port_); }

  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  int status_ = 200;
  std::string body_;
  std::string last_auth_;
  std::string last_body_;
};

TEST_F(FakeOpenAi, SuccessfulCompletion) {
  body_ = R"({"choices":[{"message":{"role":"assistant","content":"hi"}}],
              "usage":{"prompt_tokens":12,"completion_tokens":3}})";
  OpenAiCompatibleProvider p(Url(), "secret");
  ChatResponse r = p.Complete(Request("x"));
  EXPECT_EQ(r.reply.content, "hi");
  EXPECT_EQ(r.usage, (Usage{12, 3}));
  EXPECT_EQ(last_auth_, "Bearer secret");
  Json sent = ParseJson(last_body_);
  EXPECT_EQ(sent["model"], "gpt-4o");
  EXPECT_EQ(sent["messages"].size(), 2u);
  EXPECT_EQ(sent["seed"], 7);
}

TEST_F(FakeOpenAi, StatusClassification) {
  body_ = R"({"error":"x"})";
  OpenAiCompatibleProvider p(Url(), "");
  for (auto [status, retryable] : {std::pair{429, true}, {500, true}, {400, false}}) {
    status_ = status;
    try {
      p.Complete(Request("x"));
      FAIL();
    } catch (const ProviderError &e) {
      EXPECT_EQ(e.status(), status);
      EXPECT_EQ(e.retryable(), retryable);
    }
  }
  status_ = 200;
  body_ = "{}";
  EXPECT_THROW(p.Complete(Request("x")), ProviderError);
}

TEST(OpenAiProvider, TransportErrorIsRetryable) {
  OpenAiCompatibleProvider p("http://127.0.0.1:1", "", 2);
  try {
    p.Complete(Request("x"));
    FAIL();
  } catch (const ProviderError &e) {
    EXPECT_TRUE(e.retryable());
  }
}

}  // namespace
}  // namespace crashgym
