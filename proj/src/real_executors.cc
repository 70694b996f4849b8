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

#include "crashgym/real_executors.h"

#include <atomic>
#include <mutex>
#include <thread>

#include "crashgym/error.h"
#include "crashgym/subprocess.h"
#include "crashgym/console_watcher.h"
#include "crashgym/util.h"

namespace crashgym {
namespace {

namespace fs = std::filesystem;

std::string Quote(const std::string &s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  return out + "'";
}

StepResult RunLogged(const std::vector<std::string> &argv, const LogSink &log,
                     std::chrono::milliseconds timeout,
                     const std::optional<fs::path> &cwd = std::nullopt) {
  log("$ " + Join(argv, " ") + "\n");
  SubprocessOptions opts;
  opts.cwd = cwd;
  opts.timeout = timeout;
  std::string tail;
  opts.on_output = [&](std::string_view chunk) {
    log(chunk);
    tail.append(chunk);
    if (tail.size() > 8192) tail.erase(0, tail.size() - 4096);
    return true;
  };
  SubprocessResult r = RunSubprocess(argv, opts);
  if (!r.spawn_error.empty()) return StepResult::Infra(r.spawn_error);
  if (r.timed_out) return StepResult::Timeout();
  if (r.exit_code != 0) return StepResult::Failed(std::string(Tail(tail, 2000)));
  return StepResult::Ok();
}

}  // namespace

DockerBuildExecutor::DockerBuildExecutor(DockerBuildOptions options)
    : options_(std::move(options)) {}

StepResult DockerBuildExecutor::Prepare(const BuildJob &job, BuildWorkspace &ctx,
                                        const LogSink &log) {
  fs::path dir = options_.work_root / ctx.job_id;
  std::error_code ec;
  fs::remove_all(dir, ec);
  fs::create_directories(dir.parent_path(), ec);
  ctx.workdir = dir.string();
  StepResult r = RunLogged({options_.git, "clone", "--quiet", "--shared", "--no-checkout",
                            job.source, ctx.workdir},
                           log, std::chrono::minutes(30));
  if (r.status != StepResult::kOk) return StepResult::Infra("clone: " + r.detail);
  r = RunLogged({options_.git, "-C", ctx.workdir, "checkout", "--quiet", "--detach",
                 job.commit},
                log, std::chrono::minutes(30));
  if (r.status != StepResult::kOk) return StepResult::Infra("checkout: " + r.detail);
  WriteFile(dir / ".config", job.config);
  if (!job.patch.empty()) WriteFile(dir.string() + ".patch", job.patch);
  return StepResult::Ok();
}

StepResult DockerBuildExecutor::CheckPatch(const BuildJob &, BuildWorkspace &ctx,
                                           const LogSink &log) {
  StepResult r = RunLogged({options_.git, "-C", ctx.workdir, "apply", "--check",
                            ctx.workdir + ".patch"},
                           log, std::chrono::minutes(5));
  if (r.status == StepResult::kFailed) return StepResult::Failed(r.detail);
  return r;
}

std::vector<std::string> DockerBuildExecutor::CompileCommand(
    const BuildJob &job, const BuildWorkspace &ctx) const {
  std::string jobs = std::to_string(job.cores);
  std::string script = "make olddefconfig && make -j" + jobs + " " + options_.make_target;
  return {options_.docker, "run", "--rm", "--network=none",
          "--cpus=" + jobs, "-v", ctx.workdir + ":/src", "-w", "/src",
          ctx.toolchain, "sh", "-c", script};
}

StepResult DockerBuildExecutor::Compile(const BuildJob &job, BuildWorkspace &ctx,
                                        const LogSink &log) {
  if (!job.patch.empty()) {
    StepResult r = RunLogged({options_.git, "-C", ctx.workdir, "apply",
                              ctx.workdir + ".patch"},
                             log, std::chrono::minutes(5));
    if (r.status != StepResult::kOk) return StepResult::Infra("apply: " + r.detail);
  }
  return RunLogged(CompileCommand(job, ctx), log, std::chrono::seconds(job.timeout_sec));
}

std::string DockerBuildExecutor::Collect(const BuildJob &, BuildWorkspace &ctx) {
  fs::path src = fs::path(ctx.workdir) / options_.image_path;
  fs::path dst_dir = ctx.artifacts.empty() ? options_.work_root / (ctx.job_id + ".out")
                                           : fs::path(ctx.artifacts);
  fs::create_directories(dst_dir);
  fs::path dst = dst_dir / src.filename();
  fs::copy_file(src, dst, fs::copy_options::overwrite_existing);
  return dst.string();
}

void DockerBuildExecutor::Release(BuildWorkspace &ctx) {
  if (options_.keep_workdir || ctx.workdir.empty()) return;
  std::error_code ec;
  fs::remove_all(ctx.workdir, ec);
  fs::remove(ctx.workdir + ".patch", ec);
}

QemuReproExecutor::QemuReproExecutor(QemuReproOptions options)
    : options_(std::move(options)) {}

std::vector<std::string> QemuReproExecutor::QemuCommand(const ReproJob &job,
                                                        int vm_index) const {
  std::vector<std::string> cmd = {
      options_.qemu,
      "-m", std::to_string(job.per_vm.ram_mb),
      "-smp", std::to_string(job.per_vm.cores),
      "-kernel", job.image,
      "-append", "console=ttyS0 root=/dev/sda earlyprintk=serial net.ifnames=0 "
                 "oops=panic panic_on_warn=1 panic=86400",
      "-drive", "file=" + options_.rootfs.string() + ",format=raw,snapshot=on",
      "-netdev", "user,id=net0,host=10.0.2.10,hostfwd=tcp:127.0.0.1:" +
                     std::to_string(SshPort(vm_index)) + "-:22",
      "-device", "e1000,netdev=net0",
      "-nographic", "-no-reboot",
  };
  if (options_.kvm) {
    cmd.push_back("-enable-kvm");
    cmd.push_back("-cpu");
    cmd.push_back("host");
  }
  return cmd;
}

std::vector<std::string> QemuReproExecutor::SshCommand(int vm_index,
                                                       const std::string &remote) const {
  return {options_.ssh, "-p", std::to_string(SshPort(vm_index)),
          "-i", options_.ssh_key.string(),
          "-o", "StrictHostKeyChecking=no", "-o", "UserKnownHostsFile=/dev/null",
          "-o", "BatchMode=yes", "-o", "ConnectTimeout=10",
          "root@127.0.0.1", remote};
}

std::vector<std::string> QemuReproExecutor::ScpCommand(int vm_index,
                                                       const std::string &local,
                                                       const std::string &remote) const {
  return {options_.scp, "-P", std::to_string(SshPort(vm_index)),
          "-i", options_.ssh_key.string(),
          "-o", "StrictHostKeyChecking=no", "-o", "UserKnownHostsFile=/dev/null",
          "-o", "BatchMode=yes",
          local, "root@127.0.0.1:" + remote};
}

std::string QemuReproExecutor::GuestLoop(const Reproducer &reproducer,
                                         const std::string &remote_path,
                                         const std::string &execprog,
                                         const std::string &executor) {
  if (reproducer.kind == ReproducerKind::kSyz) {
    return execprog + " -executor=" + executor +
           " -repeat=0 -procs=1 -cover=0 " + Quote(remote_path);
  }
  return "chmod +x " + Quote(remote_path) + " && while true; do " +
         Quote(remote_path) + "; done";
}

VmResult QemuReproExecutor::RunVm(const ReproJob &job, int vm_index,
                                  const Reproducer &reproducer, const LogSink &log) {
  VmResult result;
  result.vm_index = vm_index;
  fs::path dir = options_.work_root / ("vm-" + std::to_string(vm_index) + "-" +
                                       Sha256Hex(job.image).substr(0, 8));
  fs::create_directories(dir);

  // Reproducer preparation happens before boot so compile errors surface as
  // execution errors rather than a silent pass.
  fs::path local;
  std::string remote;
  if (reproducer.kind == ReproducerKind::kSyz) {
    local = dir / "repro.syz";
    WriteFile(local, reproducer.text);
    remote = "/root/repro.syz";
  } else {
    WriteFile(dir / "repro.c", reproducer.text);
    local = dir / "repro";
    std::string out;
    SubprocessResult cc = RunCapture({options_.cc, "-O1", "-static", "-pthread", "-o",
                                      local.string(), (dir / "repro.c").string()},
                                     &out, std::chrono::minutes(5));
    if (!cc.ok()) {
      log("vm " + std::to_string(vm_index) + ": reproducer compile failed\n" + out);
      result.status = VmStatus::kExecError;
      return result;
    }
    remote = "/root/repro";
  }

  ConsoleWatcher watcher(options_.boot_marker);
  std::mutex mu;
  std::atomic<bool> inject_failed{false};
  std::thread injector;
  auto inject = [&] {
    std::string out;
    if (!RunCapture(ScpCommand(vm_index, local.string(), remote), &out,
                    std::chrono::minutes(2)).ok()) {
      inject_failed = true;
      log("vm " + std::to_string(vm_index) + ": copy failed\n" + out);
      return;
    }
    std::string loop = GuestLoop(reproducer, remote, options_.execprog, options_.executor);
    RunCapture(SshCommand(vm_index, loop), &out,
               std::chrono::seconds(job.timeout_sec + 60));
  };

  SubprocessOptions opts;
  opts.timeout = std::chrono::seconds(options_.boot_timeout_sec + job.timeout_sec);
  auto boot_deadline = std::chrono::steady_clock::now() +
                       std::chrono::seconds(options_.boot_timeout_sec);
  opts.on_output = [&](std::string_view chunk) {
    std::lock_guard lock(mu);
    log(chunk);
    bool was_booted = watcher.booted();
    watcher.Feed(chunk);
    if (!was_booted && watcher.booted()) injector = std::thread(inject);
    if (!watcher.booted() && std::chrono::steady_clock::now() > boot_deadline) {
      return false;
    }
    return !(watcher.state() == ConsoleWatcher::State::kCrashed &&
             watcher.report_complete()) &&
           !inject_failed;
  };
  SubprocessResult run = RunSubprocess(QemuCommand(job, vm_index), opts);
  watcher.Finish();
  if (injector.joinable()) injector.join();

  if (!run.spawn_error.empty()) {
    result.status = VmStatus::kExecError;
  } else if (watcher.state() == ConsoleWatcher::State::kCrashed) {
    result.status = VmStatus::kCrash;
    result.report = watcher.report();
  } else if (!watcher.booted()) {
    result.status = VmStatus::kBootFail;
  } else if (inject_failed) {
    result.status = VmStatus::kExecError;
  } else {
    result.status = VmStatus::kNoCrash;
  }
  std::error_code ec;
  fs::remove_all(dir, ec);
  return result;
}

}  // namespace crashgym
