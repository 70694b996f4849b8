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

#include "crashgym/subprocess.h"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

namespace crashgym {

SubprocessResult RunSubprocess(const std::vector<std::string> &argv,
                               const SubprocessOptions &options) {
  SubprocessResult result;
  if (argv.empty()) {
    result.spawn_error = "empty command";
    return result;
  }
  int out[2];
  int err[2];  // exec failure channel, closed on successful exec
  if (pipe2(out, O_CLOEXEC) != 0 || pipe2(err, O_CLOEXEC) != 0) {
    result.spawn_error = std::strerror(errno);
    return result;
  }
  std::vector<char *> args;
  for (const auto &a : argv) args.push_back(const_cast<char *>(a.c_str()));
  args.push_back(nullptr);
  std::string cwd = options.cwd ? options.cwd->string() : "";

  pid_t pid = fork();
  if (pid < 0) {
    result.spawn_error = std::strerror(errno);
    return result;
  }
  if (pid == 0) {
    setpgid(0, 0);
    dup2(out[1], STDOUT_FILENO);
    dup2(out[1], STDERR_FILENO);
    int devnull = open("/dev/null", O_RDONLY);
    if (devnull >= 0) dup2(devnull, STDIN_FILENO);
    if (!cwd.empty() && chdir(cwd.c_str()) != 0) {
      int e = errno;
      (void)!write(err[1], &e, sizeof(e));
      _exit(127);
    }
    execvp(args[0], args.data());
    int e = errno;
    (void)!write(err[1], &e, sizeof(e));
    _exit(127);
  }
  setpgid(pid, pid);
  close(out[1]);
  close(err[1]);

  int child_errno = 0;
  if (read(err[0], &child_errno, sizeof(child_errno)) == sizeof(child_errno)) {
    result.spawn_error = argv[0] + ": " + std::strerror(child_errno);
  }
  close(err[0]);

  auto deadline = std::chrono::steady_clock::now() + options.timeout;
  bool kill_it = false;
  char buf[8192];
  while (true) {
    int wait_ms = -1;
    if (options.timeout.count() > 0) {
      auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) {
        result.timed_out = true;
        kill_it = true;
        break;
      }
      wait_ms = static_cast<int>(std::min<int64_t>(left.count(), 1000));
    }
    pollfd pfd{out[0], POLLIN, 0};
    int rc = poll(&pfd, 1, wait_ms);
    if (rc < 0 && errno == EINTR) continue;
    if (rc == 0) continue;
    ssize_t n = read(out[0], buf, sizeof(buf));
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) break;
    if (options.on_output && !options.on_output(std::string_view(buf, n))) {
      result.stopped = true;
      kill_it = true;
      break;
    }
  }
  if (kill_it) kill(-pid, SIGKILL);
  close(out[0]);
  int status = 0;
  while (waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  if (!kill_it && WIFEXITED(status)) result.exit_code = WEXITSTATUS(status);
  return result;
}

SubprocessResult RunCapture(const std::vector<std::string> &argv,
                            std::string *output, std::chrono::milliseconds timeout,
                            const std::optional<std::filesystem::path> &cwd) {
  SubprocessOptions options;
  options.cwd = cwd;
  options.timeout = timeout;
  options.on_output = [output](std::string_view chunk) {
    if (output) output->append(chunk);
    return true;
  };
  return RunSubprocess(argv, options);
}

}  // namespace crashgym
