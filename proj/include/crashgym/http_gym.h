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

#ifndef CRASHGYM_HTTP_GYM_H_
#define CRASHGYM_HTTP_GYM_H_

#include <chrono>
#include <cstdint>
#include <string>

#include "crashgym/gym_types.h"
#include "crashgym/json_io.h"

namespace crashgym {

// Gym reached over the HTTP job API ("http://host:port"). Service-side
// errors come back as Error with the service's code; transport failures
// are Error(kIo).
class HttpGym : public Gym {
 public:
  explicit HttpGym(std::string base_url,
                   std::chrono::milliseconds poll_interval = std::chrono::milliseconds(100));

  std::string SubmitBuild(const BuildJob &job) override;
  std::string SubmitRepro(const ReproJob &job) override;
  Job Poll(const std::string &id) override;
  // Polls until the job is terminal.
  Job Wait(const std::string &id) override;
  std::string ReadLog(const std::string &id, uint64_t offset = 0);

 private:
  std::string base_url_;
  std::chrono::milliseconds poll_interval_;
};

}  // namespace crashgym

#endif  // CRASHGYM_HTTP_GYM_H_
