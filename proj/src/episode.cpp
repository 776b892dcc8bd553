// SPDX-License-Identifier: Apache-2.0
#include "trustrl/episode.hpp"

#include "trustrl/protocol.hpp"

namespace trustrl {

Trajectory run_episode(const QuerySample& query, const PolicyParams& policy,
                       const ToolRegistry& tools, uint64_t run_seed, uint64_t rollout_index,
                       EpisodeMode mode) {
  Rng action_rng(derive_seed(run_seed, "episode", query.id, rollout_index));
  const int num_options = static_cast<int>(query.options.size());

  auto choose = [&](const Observation& obs) {
    return mode == EpisodeMode::greedy ? policy.greedy_action(obs)
                                       : policy.sample_action(obs, action_rng);
  };

  Trajectory traj;

  // phase 1: which tools to consult, if any
  const Observation obs1 = pre_tools_observation(query.query_type, num_options);
  const SampleResult invoke = choose(obs1);
  const std::vector<std::string> invoked_tools = invoke_action_tools(invoke.action);

  std::vector<ToolCall> calls;
  std::string call_segment;
  for (const auto& tool : invoked_tools) {
    ToolCall call;
    call.tool_name = tool;
    call.arguments["image"] = "Figure 1";
    call.arguments["question"] = query.question;
    if (!call_segment.empty()) call_segment += "\n";
    call_segment += render_tool_call(call);
    calls.push_back(std::move(call));
  }
  traj.steps.push_back(
      Step::policy(invoke.action, invoke.index, obs1, invoke.log_prob, call_segment));

  std::vector<ToolResponse> responses;
  if (!calls.empty()) {
    responses = tools.dispatch_parallel(calls, query, run_seed);
    for (const auto& r : responses)
      traj.steps.push_back(Step::response(render_tool_response(r)));
  }

  // phase 2: final answer among the query's options
  const Observation obs2 = post_tools_observation(
      query.query_type, num_options, summarize_responses(responses, query.options));
  const SampleResult answer = choose(obs2);
  const std::string& answer_text = query.options.at(option_action_index(answer.action));
  traj.steps.push_back(
      Step::policy(answer.action, answer.index, obs2, answer.log_prob, render_answer(answer_text)));

  return traj;
}

}  // namespace trustrl
