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

#include "crashgym/apr_agents.h"

#include <algorithm>
#include <map>
#include <set>

#include "crashgym/crash_report.h"
#include "crashgym/error.h"
#include "crashgym/util.h"

namespace crashgym {
namespace {

constexpr std::string_view kSystemPrompt =
    "You are an experienced Linux kernel developer. You fix bugs found by the "
    "kernel sanitizers with small, focused changes that keep the surrounding "
    "code style. You only change code by rewriting whole function "
    "definitions.";

constexpr std::string_view kRawDiffSystemPrompt =
    "You are an experienced Linux kernel developer. You fix bugs found by the "
    "kernel sanitizers and answer with a unified diff.";

constexpr std::string_view kSummarySystemPrompt =
    "You explain why a candidate kernel patch failed testing so that the next "
    "repair attempt can avoid the same problem.";

constexpr size_t kExcerptInError = 200;

Error ProtocolError(int turn, std::string_view what, std::string_view reply) {
  std::string excerpt(reply.substr(0, kExcerptInError));
  return Error(ErrorCode::kProtocolViolation,
               "reply " + std::to_string(turn) + ": " + std::string(what) +
                   (excerpt.empty() ? "" : ": " + excerpt));
}

std::string Ask(AgentSession &s, std::vector<ChatMessage> &messages) {
  ChatResponse r = s.llm.Chat(s.config.model, messages, s.config.params, s.call,
                              s.transcript);
  s.usage += r.usage;
  messages.push_back(r.reply);
  return r.reply.content;
}

// Strips list decoration from a candidate line: "1. `foo()`" -> "foo".
std::string CleanName(std::string_view line) {
  std::string_view s = Trim(line);
  while (!s.empty() && (s.front() == '-' || s.front() == '*' || s.front() == '+')) {
    s.remove_prefix(1);
    s = Trim(s);
  }
  size_t digits = 0;
  while (digits < s.size() && std::isdigit(static_cast<unsigned char>(s[digits]))) ++digits;
  if (digits > 0 && digits < s.size() && (s[digits] == '.' || s[digits] == ')')) {
    s = Trim(s.substr(digits + 1));
  }
  while (!s.empty() && s.front() == '`') s.remove_prefix(1);
  while (!s.empty() && s.back() == '`') s.remove_suffix(1);
  if (EndsWith(s, "()")) s.remove_suffix(2);
  return std::string(Trim(s));
}

bool IsIdentifier(std::string_view s) {
  if (s.empty() || std::isdigit(static_cast<unsigned char>(s.front()))) return false;
  return std::all_of(s.begin(), s.end(), IsIdentChar);
}

// Definitions already shown to the model, by name.
class DefinitionCache {
 public:
  DefinitionCache(const SourceTree &tree, const LocalizationContext &ctx)
      : tree_(tree), ctx_(ctx) {}

  // Throws Error(kNotFound).
  const std::vector<FunctionDef> &Get(const std::string &name) {
    auto it = defs_.find(name);
    if (it != defs_.end()) return it->second;
    auto defs = LocateFunction(tree_, name, FileHintFor(ctx_, name));
    return defs_.emplace(name, std::move(defs)).first->second;
  }

  bool Has(const std::string &name) const { return defs_.count(name) > 0; }

 private:
  const SourceTree &tree_;
  const LocalizationContext &ctx_;
  std::map<std::string, std::vector<FunctionDef>> defs_;
};

std::string RenderDefinitions(const std::vector<FunctionDef> &defs) {
  std::string out;
  for (const auto &d : defs) {
    out += std::string(kFunctionMarker) + " " + d.name + "\n";
    out += std::string(kFileMarker) + " " + d.file + "\n";
    out += "```c\n" + d.text + "\n```\n\n";
  }
  return out;
}

std::string PatchInstructions() {
  return "Reply with the complete patched definition of every function you "
         "change. Put each one in its own fenced code block directly after a "
         "line `" + std::string(kFunctionMarker) + " <name>`. When a name has "
         "several definitions, add a line `" + std::string(kFileMarker) +
         " <path>` after it to pick one. Always return whole definitions, "
         "from the return type to the closing brace.";
}

// Resolves the model's patched functions into edits and synthesizes the
// diff. Unknown names are skipped; nothing usable is a protocol violation.
CandidatePatch BuildPatch(AgentSession &s, DefinitionCache &cache,
                          const std::vector<PatchedFunction> &patched, int turn,
                          std::string_view reply) {
  if (patched.empty()) throw ProtocolError(turn, "no FUNCTION blocks", reply);
  std::map<std::pair<std::string, int>, FunctionEdit> edits;
  for (const auto &p : patched) {
    const std::vector<FunctionDef> *defs = nullptr;
    try {
      defs = &cache.Get(p.name);
    } catch (const Error &e) {
      if (e.code() != ErrorCode::kNotFound) throw;
      continue;
    }
    const FunctionDef *target = &defs->front();
    if (p.file) {
      auto it = std::find_if(defs->begin(), defs->end(),
                             [&](const FunctionDef &d) { return d.file == *p.file; });
      if (it != defs->end()) target = &*it;
    }
    FunctionEdit edit{*target, p.text};
    try {
      ValidateEdit(edit);
    } catch (const Error &e) {
      throw ProtocolError(turn, "function " + p.name + ": " + e.what(), reply);
    }
    edits[{target->file, target->start_line}] = std::move(edit);
  }
  if (edits.empty()) throw ProtocolError(turn, "no patched function could be resolved", reply);
  std::vector<FunctionEdit> list;
  for (auto &[key, e] : edits) list.push_back(std::move(e));
  try {
    return SynthesizePatch(s.tree, s.record.parent_commit, list);
  } catch (const Error &e) {
    if (e.code() == ErrorCode::kOverlappingEdits || e.code() == ErrorCode::kValidation) {
      throw ProtocolError(turn, e.what(), reply);
    }
    throw;
  }
}

std::vector<ChatMessage> Opening(const AgentSession &s, std::string_view system) {
  return {{Role::kSystem, std::string(system)}, {Role::kUser, OpeningPrompt(s)}};
}

}  // namespace

std::string_view AgentKindName(AgentKind kind) {
  return kind == AgentKind::kSimple ? "simple" : "exploration";
}

AgentKind ParseAgentKind(std::string_view name) {
  std::string n = ToLower(name);
  if (n == "simple" || n == "simpleagent") return AgentKind::kSimple;
  if (n == "exploration" || n == "explorationagent") return AgentKind::kExploration;
  throw Error(ErrorCode::kValidation, "unknown agent kind " + std::string(name));
}

void ValidateConfig(const AgentConfig &config) {
  if (config.max_attempts < 1) {
    throw Error(ErrorCode::kValidation, "max attempts must be >= 1");
  }
  if (config.exploration_rounds < 1) {
    throw Error(ErrorCode::kValidation, "exploration rounds must be >= 1");
  }
  if (config.context_budget < 1) {
    throw Error(ErrorCode::kValidation, "context budget must be positive");
  }
  if (config.model.empty()) throw Error(ErrorCode::kValidation, "model is required");
}

std::optional<std::vector<std::string>> ParseCandidateList(std::string_view reply) {
  std::vector<std::string_view> lines = SplitLines(reply);
  auto it = std::find_if(lines.begin(), lines.end(), [](std::string_view l) {
    return StartsWith(Trim(l), kCandidateMarker);
  });
  if (it == lines.end()) return std::nullopt;
  std::vector<std::string> names;
  std::string_view same_line = Trim(Trim(*it).substr(kCandidateMarker.size()));
  std::vector<std::string_view> rest(it + 1, lines.end());
  if (!same_line.empty()) rest.insert(rest.begin(), same_line);
  for (auto line : rest) {
    if (Trim(line).empty()) {
      if (names.empty()) continue;
      break;
    }
    if (StartsWith(Trim(line), "```")) continue;
    // "foo, bar" on one line is accepted too.
    std::string_view l = line;
    size_t start = 0;
    while (start <= l.size()) {
      size_t comma = l.find(',', start);
      std::string name = CleanName(l.substr(start, comma - start));
      if (IsIdentifier(name) &&
          std::find(names.begin(), names.end(), name) == names.end()) {
        names.push_back(name);
      }
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
  }
  return names;
}

std::vector<PatchedFunction> ParsePatchedFunctions(std::string_view reply) {
  std::vector<PatchedFunction> out;
  std::vector<std::string_view> lines = SplitLines(reply);
  for (size_t i = 0; i < lines.size(); ++i) {
    std::string_view line = Trim(lines[i]);
    if (!StartsWith(line, kFunctionMarker)) continue;
    PatchedFunction fn;
    fn.name = CleanName(line.substr(kFunctionMarker.size()));
    size_t j = i + 1;
    while (j < lines.size() && Trim(lines[j]).empty()) ++j;
    if (j < lines.size() && StartsWith(Trim(lines[j]), kFileMarker)) {
      fn.file = std::string(Trim(Trim(lines[j]).substr(kFileMarker.size())));
      ++j;
    }
    while (j < lines.size() && Trim(lines[j]).empty()) ++j;
    if (j >= lines.size() || !StartsWith(Trim(lines[j]), "```")) continue;
    size_t k = j + 1;
    std::vector<std::string> body;
    while (k < lines.size() && !StartsWith(Trim(lines[k]), "```")) {
      body.emplace_back(lines[k]);
      ++k;
    }
    if (k >= lines.size()) continue;  // unterminated fence
    fn.text = Join(body, "\n");
    if (IsIdentifier(fn.name)) out.push_back(std::move(fn));
    i = k;
  }
  return out;
}

std::vector<std::string> ParseGetRequests(std::string_view reply) {
  std::vector<std::string> names;
  for (auto line : SplitLines(reply)) {
    std::string_view l = Trim(line);
    if (!StartsWith(l, kGetMarker) || l.size() == kGetMarker.size() ||
        l[kGetMarker.size()] != ' ') {
      continue;
    }
    std::string name = CleanName(l.substr(kGetMarker.size()));
    if (IsIdentifier(name) &&
        std::find(names.begin(), names.end(), name) == names.end()) {
      names.push_back(name);
    }
  }
  return names;
}

std::optional<std::string> PatchSection(std::string_view reply) {
  std::vector<std::string_view> lines = SplitLines(reply);
  for (size_t i = 0; i < lines.size(); ++i) {
    if (Trim(lines[i]) == kPatchMarker) {
      std::vector<std::string> rest(lines.begin() + static_cast<long>(i) + 1, lines.end());
      return Join(rest, "\n");
    }
  }
  return std::nullopt;
}

std::string ExtractRawDiff(std::string_view reply) {
  std::vector<std::string_view> lines = SplitLines(reply);
  std::vector<std::string> out;
  for (size_t i = 0; i < lines.size(); ++i) {
    if (!StartsWith(Trim(lines[i]), "```")) continue;
    for (size_t j = i + 1; j < lines.size() && !StartsWith(Trim(lines[j]), "```"); ++j) {
      out.emplace_back(lines[j]);
    }
    break;
  }
  if (out.empty()) {
    bool on = false;
    for (auto l : lines) {
      if (!on && (StartsWith(l, "diff --git") || StartsWith(l, "--- "))) on = true;
      if (on) out.emplace_back(l);
    }
  }
  std::string diff = Join(out, "\n");
  if (!diff.empty()) diff += "\n";
  return diff;
}

std::string OpeningPrompt(const AgentSession &s) {
  std::string p = RenderContext(s.ctx);
  if (!p.empty() && p.back() != '\n') p += "\n";
  bool simple = s.config.kind == AgentKind::kSimple && !s.config.raw_diff;
  if (simple) {
    p += "\n== BUG TYPE ==\n" + std::string(BugTypeName(s.record.bug_type)) + "\n";
    std::string_view exemplar = ExemplarPatch(s.record.bug_type);
    if (!exemplar.empty()) {
      p += "\n== EXAMPLE FIX FOR THIS BUG TYPE ==\n" + std::string(exemplar);
      if (p.back() != '\n') p += "\n";
    }
  }
  if (!s.feedback.empty()) {
    p += "\n== PREVIOUS ATTEMPTS ==\n";
    for (size_t i = 0; i < s.feedback.size(); ++i) {
      p += "Attempt " + std::to_string(i + 1) + " failed: " + s.feedback[i] + "\n";
    }
  }
  p += "\n== TASK ==\n";
  if (s.config.raw_diff) {
    p += "Fix the bug. Reply with a unified diff against the files below "
         "(paths prefixed a/ and b/) inside one ```diff fenced block.\n";
  } else if (simple) {
    p += "List the functions whose definitions you need to see in order to "
         "fix the bug, most likely first. Write the line `" +
         std::string(kCandidateMarker) + "` followed by one function name per "
         "line.\n";
  } else {
    p += "Find the root cause and fix it. Each reply must be one of:\n"
         "- one or more lines `" + std::string(kGetMarker) +
         " <function>` to receive those definitions;\n"
         "- a line reading `" + std::string(kPatchMarker) +
         "` followed by the patched functions.\n" + PatchInstructions() +
         "\nYou have at most " + std::to_string(s.config.exploration_rounds) +
         " replies.\n";
  }
  return p;
}

CandidatePatch RunSimpleAgent(AgentSession &s) {
  DefinitionCache cache(s.tree, s.ctx);
  std::vector<ChatMessage> messages = Opening(s, kSystemPrompt);
  std::string reply = Ask(s, messages);
  auto names = ParseCandidateList(reply);
  if (!names) throw ProtocolError(1, "missing CANDIDATE FUNCTIONS list", reply);
  if (names->empty()) throw ProtocolError(1, "empty candidate list", reply);

  std::string answer;
  std::string defs;
  for (const auto &name : *names) {
    try {
      defs += RenderDefinitions(cache.Get(name));
    } catch (const Error &e) {
      if (e.code() != ErrorCode::kNotFound) throw;
      answer += "NOTE: no definition of `" + name + "` was found; it is skipped.\n";
    }
  }
  if (defs.empty()) {
    throw Error(ErrorCode::kNotFound,
                "none of the candidate functions exist: " + Join(*names, ", "));
  }
  if (!answer.empty()) answer += "\n";
  answer += "Definitions of the requested functions:\n\n" + defs + PatchInstructions() + "\n";
  messages.push_back({Role::kUser, answer});

  reply = Ask(s, messages);
  return BuildPatch(s, cache, ParsePatchedFunctions(reply), 2, reply);
}

CandidatePatch RunExplorationAgent(AgentSession &s) {
  DefinitionCache cache(s.tree, s.ctx);
  std::vector<ChatMessage> messages = Opening(s, kSystemPrompt);
  for (int round = 1; round <= s.config.exploration_rounds; ++round) {
    std::string reply = Ask(s, messages);
    if (auto section = PatchSection(reply)) {
      return BuildPatch(s, cache, ParsePatchedFunctions(*section), round, reply);
    }
    std::vector<std::string> gets = ParseGetRequests(reply);
    if (gets.empty()) throw ProtocolError(round, "neither GET lines nor PATCH", reply);
    if (round == s.config.exploration_rounds) break;
    std::string answer;
    for (const auto &name : gets) {
      try {
        answer += RenderDefinitions(cache.Get(name));
      } catch (const Error &e) {
        if (e.code() != ErrorCode::kNotFound) throw;
        answer += "NOTE: no definition of `" + name + "` was found.\n\n";
      }
    }
    int left = s.config.exploration_rounds - round;
    answer += std::to_string(left) + (left == 1 ? " reply" : " replies") +
              " left. Reply with " + std::string(kGetMarker) +
              " lines or with " + std::string(kPatchMarker) + ".\n";
    messages.push_back({Role::kUser, answer});
  }
  throw Error(ErrorCode::kRoundsExhausted,
              "no PATCH within " + std::to_string(s.config.exploration_rounds) +
                  " replies");
}

CandidatePatch RunRawDiffAgent(AgentSession &s) {
  std::vector<std::string> files;
  auto add = [&](const std::string &f) {
    if (s.tree.Exists(f) && std::find(files.begin(), files.end(), f) == files.end()) {
      files.push_back(f);
    }
  };
  for (const auto &c : s.ctx.stack_candidates) {
    if (c.file) {
      add(*c.file);
    } else {
      for (const auto &f : s.tree.FilesMentioning(c.function)) add(f);
    }
  }
  for (const auto &t : s.ctx.bic_functions) add(t.file);

  std::vector<ChatMessage> messages = Opening(s, kRawDiffSystemPrompt);
  std::string &prompt = messages.back().content;
  prompt += "\n== SOURCE FILES ==\n";
  size_t budget = static_cast<size_t>(s.config.context_budget);
  size_t used = 0;
  for (const auto &f : files) {
    std::string text = s.tree.Read(f);
    std::string block = "--- FILE: " + f + " ---\n" + text;
    if (!block.empty() && block.back() != '\n') block += "\n";
    if (used + block.size() > budget) {
      if (used == 0) prompt += block.substr(0, budget);
      break;
    }
    prompt += block;
    used += block.size();
  }
  std::string reply = Ask(s, messages);
  CandidatePatch patch;
  patch.base_commit = s.record.parent_commit;
  patch.diff = ExtractRawDiff(reply);
  if (patch.diff.empty()) throw ProtocolError(1, "no diff in reply", reply);
  return patch;
}

CandidatePatch RunAgent(AgentSession &session) {
  if (session.config.raw_diff) return RunRawDiffAgent(session);
  if (session.config.kind == AgentKind::kExploration) return RunExplorationAgent(session);
  return RunSimpleAgent(session);
}

std::string FailureClass(const FailureOutcome &outcome) {
  if (const auto *b = std::get_if<BuildOutcome>(&outcome)) {
    return std::string(BuildOutcomeName(*b));
  }
  return std::string(ReproClassName(std::get<ReproOutcome>(outcome).aggregate));
}

std::string FailureLog(const FailureOutcome &outcome) {
  if (const auto *b = std::get_if<BuildOutcome>(&outcome)) {
    if (const auto *c = std::get_if<CompileError>(b)) return c->log_excerpt;
    if (const auto *p = std::get_if<BadPatch>(b)) return p->detail;
    if (const auto *i = std::get_if<InfraError>(b)) return i->detail;
    return "";
  }
  for (const auto &vm : std::get<ReproOutcome>(outcome).per_vm) {
    if (vm.status == VmStatus::kCrash && !vm.report.empty()) return vm.report;
  }
  return "";
}

std::string SummarizeFailure(const FailureOutcome &outcome, Gateway &llm,
                             const std::string &model, const ChatParams &params,
                             const CallContext &call, Usage *usage,
                             Transcript *transcript) {
  std::string cls = FailureClass(outcome);
  std::string log(Trim(FailureLog(outcome)));
  if (log.empty()) {
    static const std::map<std::string, std::string> kCanned = {
        {"BadPatch", "The patch did not apply to the source tree."},
        {"CompileError", "The patched kernel did not compile."},
        {"Timeout", "The kernel build did not finish within its time limit."},
        {"InfraError", "The test infrastructure failed before the patch was tested."},
        {"Triggered", "The reproducer still triggers the original crash."},
        {"DifferentCrash", "The patched kernel crashes differently under the reproducer."},
        {"BootFail", "The patched kernel failed to boot."},
        {"Other", "The reproducer could not be run against the patched kernel."},
    };
    auto it = kCanned.find(cls);
    return "[" + cls + "] " + (it == kCanned.end() ? "The attempt failed." : it->second);
  }
  std::string tail(Tail(log, kFailureLogTail));
  std::vector<ChatMessage> messages = {
      {Role::kSystem, std::string(kSummarySystemPrompt)},
      {Role::kUser, "Outcome: " + cls +
                        "\nSummarize why the patch failed in at most three "
                        "sentences. Name the failing symbol, file or crash "
                        "title.\n\n```\n" + tail + "\n```\n"}};
  ChatResponse r = llm.Chat(model, messages, params, call, transcript);
  if (usage) *usage += r.usage;
  return "[" + cls + "] " + std::string(Trim(r.reply.content));
}

std::vector<AttemptLog> RepairLoop(const AgentConfig &config, const BugRecord &record,
                                   Gym &gym, Gateway &llm, const SourceTree &tree,
                                   const RepairOptions &options) {
  ValidateConfig(config);
  std::vector<AttemptLog> logs;
  CrashReport report = ParseReport(record.crash_report);
  std::optional<std::string> bic = config.use_bic ? record.bic_diff : std::nullopt;
  LocalizationContext ctx = BuildContext(record, report, bic, config.context_budget);
  CrashSignature baseline = Signature(report);
  CallContext call{options.run_id, record.bug_id};
  std::vector<std::string> feedback;

  for (int attempt = 1; attempt <= config.max_attempts; ++attempt) {
    AttemptLog log;
    log.attempt_index = attempt;
    AgentSession session{config, record, ctx, llm, tree, call, feedback,
                         &log.transcript, {}};
    bool stop = false;
    std::optional<FailureOutcome> failure;
    try {
      log.patch = RunAgent(session);
    } catch (const Error &e) {
      log.agent_error = std::string(ErrorCodeName(e.code())) + ": " + e.what();
      stop = e.code() == ErrorCode::kProviderError ||
             e.code() == ErrorCode::kReplayMiss ||
             e.code() == ErrorCode::kUnknownModel;
    }
    log.usage = session.usage;

    if (log.patch) {
      BuildJob build;
      build.patch = log.patch->diff;
      build.commit = record.parent_commit;
      build.source = options.source;
      build.config = record.kernel_config;
      build.compiler = record.compiler_hint;
      build.cores = options.build_cores;
      build.timeout_sec = options.build_timeout_sec;
      build.metadata = {{"bug_id", record.bug_id},
                        {"run_id", options.run_id},
                        {"attempt", std::to_string(attempt)}};
      try {
        log.build = RunBuildOn(gym, build);
      } catch (const std::exception &e) {
        log.build = InfraError{e.what()};
      }
      if (IsBuildSuccess(*log.build)) {
        ReproJob repro;
        repro.image = std::get<BuildSuccess>(*log.build).image;
        repro.reproducers = ReproducersOf(record);
        repro.vm_count = options.vm_count;
        repro.timeout_sec = options.repro_timeout_sec;
        repro.metadata = build.metadata;
        repro.baseline = baseline;
        try {
          log.repro = RunReproOn(gym, repro);
        } catch (const std::exception &) {
          ReproOutcome other;
          other.aggregate = ReproClass::kOther;
          log.repro = other;
        }
        failure = *log.repro;
      } else {
        failure = *log.build;
      }
    }

    bool passed = log.passed();
    if (!passed && !stop && attempt < config.max_attempts) {
      if (failure) {
        try {
          log.failure_summary = SummarizeFailure(*failure, llm, config.model, config.params,
                                                 call, &log.usage, &log.transcript);
        } catch (const Error &e) {
          log.agent_error = std::string(ErrorCodeName(e.code())) + ": " + e.what();
          stop = true;
        }
      } else {
        log.failure_summary =
            "[AgentError] The previous attempt produced no usable patch: " +
            log.agent_error;
      }
      if (log.failure_summary) feedback.push_back(*log.failure_summary);
    }
    logs.push_back(std::move(log));
    if (passed || stop) break;
  }
  return logs;
}

}  // namespace crashgym
