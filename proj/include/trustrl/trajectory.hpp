// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "trustrl/observation.hpp"
#include "trustrl/reward.hpp"

namespace trustrl {

enum class StepKind { policy_action, tool_response };

// One step of a rollout. Policy steps carry the action taken, its log-prob
// under the generating policy, and the observation it was chosen from; tool
// responses are environment steps and are masked out of the objective.
struct Step {
  StepKind kind = StepKind::policy_action;
  std::string action_id;               // empty on tool_response steps
  size_t action_index = 0;             // index into the legal action set
  std::optional<Observation> obs;      // set on policy steps
  double log_prob = 0.0;               // meaningful iff mask == 1
  int mask = 0;                        // 1 iff kind == policy_action
  std::string rendered;                // this step's contribution to the rollout text

  static Step policy(std::string action_id, size_t action_index, Observation obs,
                     double log_prob, std::string rendered) {
    Step s;
    s.kind = StepKind::policy_action;
    s.action_id = std::move(action_id);
    s.action_index = action_index;
    s.obs = std::move(obs);
    s.log_prob = log_prob;
    s.mask = 1;
    s.rendered = std::move(rendered);
    return s;
  }

  static Step response(std::string rendered) {
    Step s;
    s.kind = StepKind::tool_response;
    s.mask = 0;
    s.rendered = std::move(rendered);
    return s;
  }
};

struct Trajectory {
  std::vector<Step> steps;
  std::optional<RewardBreakdown> reward;  // set after scoring

  size_t masked_step_count() const {
    size_t n = 0;
    for (const auto& s : steps) n += s.mask;
    return n;
  }
};

}  // namespace trustrl
