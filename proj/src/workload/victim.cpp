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

#include "mpssim/workload/victim.hpp"

namespace mpssim::workload {

VictimLoop::VictimLoop(World& w, Pid pid, int iterations, Duration kernel_us)
    : w_(w), pid_(pid), iterations_(iterations), kernel_us_(kernel_us) {
  if (iterations < 0) fail(ErrorCode::invalid_argument, "negative iteration count");
  if (kernel_us <= 0) fail(ErrorCode::invalid_argument, "kernel duration must be positive");
  w_.on_termination([this](Pid p, std::string_view) {
    if (p != pid_ || completed_ >= iterations_ || died_at_) return;
    died_at_ = completed_ + 1;
    w_.kernel().emit(sim::EntityRef::client(pid_), "victim.died", {{"iteration", *died_at_}});
  });
}

void VictimLoop::start(Duration delay) {
  w_.kernel().schedule(delay, sim::EntityRef::client(pid_), "victim.start", [this] { next(); });
}

void VictimLoop::next() {
  if (completed_ >= iterations_) {
    w_.kernel().emit(sim::EntityRef::client(pid_), "victim.done", {{"iterations", completed_}});
    return;
  }
  w_.launch(pid_, kernel_us_, "victim.kernel", [this] { finish_iteration(); });
}

void VictimLoop::finish_iteration() {
  const auto& notifiers = w_.faults().notifiers();
  if (notifiers.count(pid_) != 0) {
    died_at_ = completed_ + 1;
    w_.kernel().emit(sim::EntityRef::client(pid_), "victim.error", {{"iteration", *died_at_}});
    return;
  }
  ++completed_;
  w_.kernel().emit(sim::EntityRef::client(pid_), "victim.iter", {{"i", completed_}});
  next();
}

std::string VictimLoop::verdict() const {
  if (died_at_) return "DIED(" + std::to_string(*died_at_) + ")";
  return completed_ == iterations_ ? "ALIVE" : "RUNNING";
}

}  // namespace mpssim::workload
