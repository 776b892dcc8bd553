// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

#include "trustrl/dataset.hpp"
#include "trustrl/policy.hpp"
#include "trustrl/tools.hpp"
#include "trustrl/trajectory.hpp"

namespace trustrl {

enum class EpisodeMode { sample, greedy };

// Runs one rollout: the policy picks an invoke set (phase 1), called tools
// respond as masked environment steps, then the policy picks a final answer
// among the query's options (phase 2). Action sampling streams from
// (run_seed, query id, rollout_index); tool draws from (run_seed, query id,
// tool, ordinal), independent of rollout identity. Tool failures become
// rendered error responses; the episode never aborts.
Trajectory run_episode(const QuerySample& query, const PolicyParams& policy,
                       const ToolRegistry& tools, uint64_t run_seed, uint64_t rollout_index,
                       EpisodeMode mode);

}  // namespace trustrl
