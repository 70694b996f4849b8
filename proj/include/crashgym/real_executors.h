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

#ifndef CRASHGYM_REAL_EXECUTORS_H_
#define CRASHGYM_REAL_EXECUTORS_H_

#include <filesystem>
#include <string>
#include <vector>

#include "crashgym/executor.h"

namespace crashgym {

struct DockerBuildOptions {
  std::filesystem::path work_root;  // per-job checkouts live here
  std::string docker = "docker";
  std::string git = "git";
  std::string make_target = "bzImage";
  std::string image_path = "arch/x86/boot/bzImage";
  bool keep_workdir = false;
};

// Checks the commit out of a local git repository (job.source), dry-runs the
// patch with `git apply --check` and compiles inside the toolchain image.
class DockerBuildExecutor : public BuildExecutor {
 public:
  explicit DockerBuildExecutor(DockerBuildOptions options);

  StepResult Prepare(const BuildJob &job, BuildWorkspace &ctx,
                     const LogSink &log) override;
  StepResult CheckPatch(const BuildJob &job, BuildWorkspace &ctx,
                        const LogSink &log) override;
  StepResult Compile(const BuildJob &job, BuildWorkspace &ctx,
                     const LogSink &log) override;
  std::string Collect(const BuildJob &job, BuildWorkspace &ctx) override;
  void Release(BuildWorkspace &ctx) override;

  // Container invocation for the compile step.
  std::vector<std::string> CompileCommand(const BuildJob &job,
                                          const BuildWorkspace &ctx) const;

 private:
  DockerBuildOptions options_;
};

struct QemuReproOptions {
  std::string qemu = "qemu-system-x86_64";
  std::filesystem::path rootfs;   // disk image with sshd and syz-execprog
  std::filesystem::path ssh_key;  // root login key for the rootfs
  std::filesystem::path work_root;
  std::string ssh = "ssh";
  std::string scp = "scp";
  std::string cc = "gcc";
  std::string execprog = "/syz-execprog";
  std::string executor = "/syz-executor";
  int base_ssh_port = 10022;
  int boot_timeout_sec = 300;
  bool kvm = true;
  std::string boot_marker = "login:";
};

// Boots the image under QEMU, copies the reproducer in over ssh, loops it
// and watches the serial console until a crash report completes or the
// timeout passes.
class QemuReproExecutor : public ReproExecutor {
 public:
  explicit QemuReproExecutor(QemuReproOptions options);

  VmResult RunVm(const ReproJob &job, int vm_index, const Reproducer &reproducer,
                 const LogSink &log) override;

  std::vector<std::string> QemuCommand(const ReproJob &job, int vm_index) const;
  std::vector<std::string> SshCommand(int vm_index, const std::string &remote) const;
  std::vector<std::string> ScpCommand(int vm_index, const std::string &local,
                                      const std::string &remote) const;
  // Shell loop run inside the guest.
  static std::string GuestLoop(const Reproducer &reproducer,
                               const std::string &remote_path,
                               const std::string &execprog,
                               const std::string &executor);

 private:
  int SshPort(int vm_index) const { return options_.base_ssh_port + vm_index; }

  QemuReproOptions options_;
};

}  // namespace crashgym

#endif  // CRASHGYM_REAL_EXECUTORS_H_
