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

#ifndef CRASHGYM_APR_AGENTS_H_
#define CRASHGYM_APR_AGENTS_H_

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "crashgym/bug_dataset.h"
#include "crashgym/gym_types.h"
#include "crashgym/llm_gateway.h"
#include "crashgym/localization.h"
#include "crashgym/source_functions.h"

namespace crashgym {

// Protocol markers shared with the model.
inline constexpr std::string_view kCandidateMarker = "CANDIDATE FUNCTIONS:";
inline constexpr std::string_view kFunctionMarker = "FUNCTION:";
inline constexpr std::string_view kFileMarker = "FILE:";
inline constexpr std::string_view kGetMarker = "GET";
inline constexpr std::string_view kPatchMarker = "PATCH";

inline constexpr int kDefaultExplorationRounds = 10;
inline constexpr size_t kFailureLogTail = 4000;

enum class AgentKind { kSimple, kExploration };
std::string_view AgentKindName(AgentKind kind);
AgentKind ParseAgentKind(std::string_view name);

struct AgentConfig {
  AgentKind kind = AgentKind::kSimple;
  bool use_bic = true;
  std::string model = "gpt-4o";
  int max_attempts = 3;  // total, including the first
  int exploration_rounds = kDefaultExplorationRounds;
  int context_budget = kDefaultContextBudget;
  // Baseline mode: whole files go out and a raw unified diff comes back.
  bool raw_diff = false;
  ChatParams params;
};

// Throws Error(kValidation).
void ValidateConfig(const AgentConfig &config);

// Bug-class exemplar used by the simple agent; empty for kOther.
std::string_view ExemplarPatch(BugType type);

// Everything one agent run needs. `feedback` holds the failure summaries
// of earlier attempts, oldest first.
struct AgentSession {
  const AgentConfig &config;
  const BugRecord &record;
  const LocalizationContext &ctx;
  Gateway &llm;
  const SourceTree &tree;
  CallContext call;
  std::vector<std::string> feedback;
  Transcript *transcript = nullptr;
  Usage usage;  // accumulated over the session's calls
};

// Parsed `FUNCTION: <name>` fenced block.
struct PatchedFunction {
  std::string name;
  std::optional<std::string> file;  // from an optional `FILE: <path>` line
  std::string text;
};

// Names listed after the candidate marker, one per line. Bullets,
// numbering, backticks and trailing "()" are tolerated. Nullopt when the
// marker is absent.
std::optional<std::vector<std::string>> ParseCandidateList(std::string_view reply);
std::vector<PatchedFunction> ParsePatchedFunctions(std::string_view reply);
// `GET <name>` lines of an exploration reply.
std::vector<std::string> ParseGetRequests(std::string_view reply);
// Text after a line reading exactly PATCH, or nullopt.
std::optional<std::string> PatchSection(std::string_view reply);
// First fenced block (or text from the first diff header on).
std::string ExtractRawDiff(std::string_view reply);

// The opening user prompt of either agent.
std::string OpeningPrompt(const AgentSession &session);

// Three-turn protocol: candidates, definitions, patched definitions.
// Throws Error(kProtocolViolation) and Error(kNotFound).
CandidatePatch RunSimpleAgent(AgentSession &session);

// GET/PATCH loop of at most exploration_rounds model turns. Throws
// Error(kRoundsExhausted) and Error(kProtocolViolation).
CandidatePatch RunExplorationAgent(AgentSession &session);

// Baseline: source files of the localized functions in, raw diff out. The
// diff is not checked here.
CandidatePatch RunRawDiffAgent(AgentSession &session);

// Dispatches on the config.
CandidatePatch RunAgent(AgentSession &session);

using FailureOutcome = std::variant<BuildOutcome, ReproOutcome>;

// "[<class>] summary". One model call over the last 4000 characters of the
// failure log; an empty log is summarized from the class alone without a
// call.
std::string SummarizeFailure(const FailureOutcome &outcome, Gateway &llm,
                             const std::string &model, const ChatParams &params,
                             const CallContext &call, Usage *usage = nullptr,
                             Transcript *transcript = nullptr);

// Failure text the summarizer sees, untruncated.
std::string FailureLog(const FailureOutcome &outcome);
std::string FailureClass(const FailureOutcome &outcome);

struct AttemptLog {
  int attempt_index = 1;  // 1-based
  std::optional<CandidatePatch> patch;
  // Unset when the agent failed before producing a patch.
  std::optional<BuildOutcome> build;
  std::optional<ReproOutcome> repro;  // only after a successful build
  std::optional<std::string> failure_summary;
  std::string agent_error;  // "<code>: <message>" when the agent failed
  Usage usage;
  Transcript transcript;

  bool passed() const {
    return repro && repro->aggregate == ReproClass::kPass;
  }
};

struct RepairOptions {
  std::string run_id;
  std::string source = "linux";
  int build_cores = 1;
  int build_timeout_sec = kDefaultBuildTimeoutSec;
  int vm_count = kDefaultVmCount;
  int repro_timeout_sec = kDefaultReproTimeoutSec;
};

// Agent -> build -> repro, up to config.max_attempts, stopping at the
// first Pass. Each failure is summarized and the summary reaches the next
// attempt's opening prompt. Never throws for component failures; they end
// up in the logs. Provider faults and replay misses stop the loop.
std::vector<AttemptLog> RepairLoop(const AgentConfig &config,
                                   const BugRecord &record, Gym &gym,
                                   Gateway &llm, const SourceTree &tree,
                                   const RepairOptions &options = {});

}  // namespace crashgym

#endif  // CRASHGYM_APR_AGENTS_H_
