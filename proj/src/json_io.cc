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

#include "crashgym/json_io.h"

#include "crashgym/error.h"

namespace crashgym {
namespace {

template <typename T>
void PutOptional(Json &j, const char *key, const std::optional<T> &v) {
  if (v) j[key] = *v;
}

template <typename T>
std::optional<T> GetOptional(const Json &j, const char *key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

Metadata MetadataFromJson(const Json &j, const char *key) {
  Metadata m;
  if (!j.contains(key)) return m;
  for (const auto &[k, v] : j.at(key).items()) {
    m[k] = v.is_string() ? v.get<std::string>() : v.dump();
  }
  return m;
}

VmStatus ParseVmStatus(std::string_view name) {
  for (VmStatus s : {VmStatus::kNoCrash, VmStatus::kCrash, VmStatus::kBootFail,
                     VmStatus::kExecError}) {
    if (VmStatusName(s) == name) return s;
  }
  throw Error(ErrorCode::kValidation, "unknown VM status " + std::string(name));
}

}  // namespace

std::string DumpJson(const Json &j, int indent) {
  return j.dump(indent, ' ', false, Json::error_handler_t::replace);
}

Json ParseJson(std::string_view text) {
  try {
    return Json::parse(text);
  } catch (const Json::exception &e) {
    throw Error(ErrorCode::kValidation, std::string("invalid JSON: ") + e.what());
  }
}

JobState ParseJobState(std::string_view name) {
  for (JobState s : {JobState::kQueued, JobState::kRunning, JobState::kDone,
                     JobState::kFailed, JobState::kTimedOut, JobState::kCancelled}) {
    if (JobStateName(s) == name) return s;
  }
  throw Error(ErrorCode::kValidation, "unknown job state " + std::string(name));
}

ReproClass ParseReproClass(std::string_view name) {
  for (ReproClass c : {ReproClass::kPass, ReproClass::kTriggered,
                       ReproClass::kDifferentCrash, ReproClass::kBootFail,
                       ReproClass::kOther}) {
    if (ReproClassName(c) == name) return c;
  }
  throw Error(ErrorCode::kValidation, "unknown repro class " + std::string(name));
}

Json ToJson(const CrashSignature &sig) {
  return {{"normalized_title", sig.normalized_title}, {"top_frames", sig.top_frames}};
}

CrashSignature SignatureFromJson(const Json &j) {
  return WithJsonErrors([&] {
    CrashSignature sig;
    sig.normalized_title = j.at("normalized_title").get<std::string>();
    sig.top_frames = j.at("top_frames").get<std::vector<std::string>>();
    return sig;
  });
}

Json ToJson(const BuildJob &job) {
  return {{"patch", job.patch},       {"commit", job.commit},
          {"source", job.source},     {"config", job.config},
          {"compiler", job.compiler}, {"cores", job.cores},
          {"timeout_sec", job.timeout_sec}, {"metadata", job.metadata}};
}

BuildJob BuildJobFromJson(const Json &j) {
  return WithJsonErrors([&] {
    if (!j.is_object()) throw Error(ErrorCode::kValidation, "expected an object");
    BuildJob job;
    job.patch = j.value("patch", "");
    job.commit = j.at("commit").get<std::string>();
    job.source = j.value("source", "");
    job.config = j.value("config", "");
    job.compiler = j.value("compiler", "");
    job.cores = j.value("cores", 1);
    job.timeout_sec = j.value("timeout_sec", kDefaultBuildTimeoutSec);
    job.metadata = MetadataFromJson(j, "metadata");
    return job;
  });
}

Json ToJson(const ReproJob &job) {
  Json repros = Json::array();
  for (const auto &r : job.reproducers) {
    repros.push_back({{"kind", ReproducerKindName(r.kind)}, {"text", r.text}});
  }
  Json j = {{"image", job.image},
            {"reproducers", repros},
            {"vm_count", job.vm_count},
            {"per_vm", {{"cores", job.per_vm.cores}, {"ram_mb", job.per_vm.ram_mb}}},
            {"timeout_sec", job.timeout_sec},
            {"metadata", job.metadata}};
  if (job.baseline) j["baseline"] = ToJson(*job.baseline);
  return j;
}

ReproJob ReproJobFromJson(const Json &j) {
  return WithJsonErrors([&] {
    if (!j.is_object()) throw Error(ErrorCode::kValidation, "expected an object");
    ReproJob job;
    job.image = j.at("image").get<std::string>();
    for (const auto &r : j.at("reproducers")) {
      std::string kind = r.at("kind").get<std::string>();
      if (kind != "syz" && kind != "C" && kind != "c") {
        throw Error(ErrorCode::kValidation, "unknown reproducer kind " + kind);
      }
      job.reproducers.push_back(
          {kind == "syz" ? ReproducerKind::kSyz : ReproducerKind::kC,
           r.at("text").get<std::string>()});
    }
    job.vm_count = j.value("vm_count", kDefaultVmCount);
    if (j.contains("per_vm")) {
      job.per_vm.cores = j["per_vm"].value("cores", kDefaultVmCores);
      job.per_vm.ram_mb = j["per_vm"].value("ram_mb", kDefaultVmRamMb);
    }
    job.timeout_sec = j.value("timeout_sec", kDefaultReproTimeoutSec);
    job.metadata = MetadataFromJson(j, "metadata");
    if (j.contains("baseline") && !j["baseline"].is_null()) {
      job.baseline = SignatureFromJson(j["baseline"]);
    }
    return job;
  });
}

Json ToJson(const BuildOutcome &outcome) {
  Json j = {{"outcome", BuildOutcomeName(outcome)}};
  if (const auto *s = std::get_if<BuildSuccess>(&outcome)) j["image"] = s->image;
  if (const auto *b = std::get_if<BadPatch>(&outcome)) j["detail"] = b->detail;
  if (const auto *c = std::get_if<CompileError>(&outcome)) {
    j["log_ref"] = c->log_ref;
    j["log_excerpt"] = c->log_excerpt;
  }
  if (const auto *i = std::get_if<InfraError>(&outcome)) j["detail"] = i->detail;
  return j;
}

BuildOutcome BuildOutcomeFromJson(const Json &j) {
  return WithJsonErrors([&]() -> BuildOutcome {
    std::string name = j.at("outcome").get<std::string>();
    if (name == "Success") return BuildSuccess{j.at("image").get<std::string>()};
    if (name == "BadPatch") return BadPatch{j.value("detail", "")};
    if (name == "CompileError") {
      return CompileError{j.value("log_ref", ""), j.value("log_excerpt", "")};
    }
    if (name == "Timeout") return BuildTimeout{};
    if (name == "InfraError") return InfraError{j.value("detail", "")};
    throw Error(ErrorCode::kValidation, "unknown build outcome " + name);
  });
}

Json ToJson(const ReproOutcome &outcome) {
  Json vms = Json::array();
  for (const auto &vm : outcome.per_vm) {
    Json v = {{"vm_index", vm.vm_index}, {"status", VmStatusName(vm.status)}};
    if (!vm.report.empty()) v["report"] = vm.report;
    vms.push_back(std::move(v));
  }
  return {{"aggregate", ReproClassName(outcome.aggregate)},
          {"nondet", outcome.nondet},
          {"per_vm", vms}};
}

ReproOutcome ReproOutcomeFromJson(const Json &j) {
  return WithJsonErrors([&] {
    ReproOutcome out;
    out.aggregate = ParseReproClass(j.at("aggregate").get<std::string>());
    out.nondet = j.value("nondet", false);
    for (const auto &v : j.at("per_vm")) {
      out.per_vm.push_back({v.at("vm_index").get<int>(),
                            ParseVmStatus(v.at("status").get<std::string>()),
                            v.value("report", "")});
    }
    return out;
  });
}

Json ToJson(const Job &job) {
  Json j = {{"id", job.id},
            {"kind", JobKindName(job.kind)},
            {"state", JobStateName(job.state)},
            {"submitted_ms", job.submitted_ms},
            {"log_ref", job.log_ref},
            {"result", nullptr}};
  PutOptional(j, "started_ms", job.started_ms);
  PutOptional(j, "finished_ms", job.finished_ms);
  if (!job.error.empty()) j["error"] = job.error;
  if (const auto *b = std::get_if<BuildOutcome>(&job.result)) j["result"] = ToJson(*b);
  if (const auto *r = std::get_if<ReproOutcome>(&job.result)) j["result"] = ToJson(*r);
  return j;
}

Job JobFromJson(const Json &j) {
  return WithJsonErrors([&] {
    Job job;
    job.id = j.at("id").get<std::string>();
    std::string kind = j.at("kind").get<std::string>();
    if (kind != "build" && kind != "repro") {
      throw Error(ErrorCode::kValidation, "unknown job kind " + kind);
    }
    job.kind = kind == "build" ? JobKind::kBuild : JobKind::kRepro;
    job.state = ParseJobState(j.at("state").get<std::string>());
    job.submitted_ms = j.value("submitted_ms", int64_t{0});
    job.started_ms = GetOptional<int64_t>(j, "started_ms");
    job.finished_ms = GetOptional<int64_t>(j, "finished_ms");
    job.log_ref = j.value("log_ref", "");
    job.error = j.value("error", "");
    if (j.contains("result") && !j["result"].is_null()) {
      if (job.kind == JobKind::kBuild) {
        job.result = BuildOutcomeFromJson(j["result"]);
      } else {
        job.result = ReproOutcomeFromJson(j["result"]);
      }
    }
    return job;
  });
}

}  // namespace crashgym
