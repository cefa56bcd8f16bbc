/* Copyright 2026 The mpssim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <optional>
#include <string>

#include "mpssim/common.hpp"
#include "mpssim/world.hpp"

namespace mpssim::workload {

/// Generic co-running client: launches `iterations` kernels back to back and
/// checks its error notifier after each one.
class VictimLoop {
 public:
  VictimLoop(World& w, Pid pid, int iterations, Duration kernel_us);

  void start(Duration delay = 0);

  Pid pid() const { return pid_; }
  int completed() const { return completed_; }
  bool alive() const { return !died_at_ && completed_ == iterations_; }
  std::optional<int> died_at() const { return died_at_; }
  /// "ALIVE", "DIED(<iteration>)", or "RUNNING" before the loop ends.
  std::string verdict() const;

 private:
  void next();
  void finish_iteration();

  World& w_;
  Pid pid_;
  int iterations_;
  Duration kernel_us_;
  int completed_ = 0;
  std::optional<int> died_at_;
};

}  // namespace mpssim::workload
