// SPDX-License-Identifier: Apache-2.0
#include "trustrl/observation.hpp"

#include <algorithm>

#include "trustrl/protocol.hpp"

namespace trustrl {

std::string ResponsePattern::encode() const {
  switch (kind) {
    case Kind::none:
      return "none";
    case Kind::no_tools:
      return "no_tools";
    case Kind::single:
      return "single";
    case Kind::agree:
      return "agree@" + std::to_string(agree_option);
    case Kind::conflict: {
      std::string s = "conflict:";
      for (size_t i = 0; i < votes.size(); ++i) {
        if (i > 0) s += ",";
        s += votes[i].first;
        s += "=";
        s += votes[i].second < 0 ? "x" : std::to_string(votes[i].second);
      }
      return s;
    }
  }
  return "none";
}

std::string Observation::key() const {
  if (phase == Phase::pre_tools) return "phase=pre|type=" + query_type;
  return "phase=post|type=" + query_type + "|opts=" + std::to_string(num_options) +
         "|pat=" + pattern.encode();
}

Observation pre_tools_observation(const std::string& query_type, int num_options) {
  Observation obs;
  obs.query_type = query_type;
  obs.phase = Phase::pre_tools;
  obs.pattern.kind = ResponsePattern::Kind::none;
  obs.num_options = num_options;
  return obs;
}

Observation post_tools_observation(const std::string& query_type, int num_options,
                                   ResponsePattern pattern) {
  Observation obs;
  obs.query_type = query_type;
  obs.phase = Phase::post_tools;
  obs.pattern = std::move(pattern);
  obs.num_options = num_options;
  return obs;
}

ResponsePattern summarize_responses(const std::vector<ToolResponse>& responses,
                                    const std::vector<std::string>& options) {
  ResponsePattern p;
  if (responses.empty()) {
    p.kind = ResponsePattern::Kind::no_tools;
    return p;
  }
  if (responses.size() == 1) {
    p.kind = ResponsePattern::Kind::single;
    return p;
  }
  auto option_index = [&options](const std::string& content) -> int {
    for (size_t i = 0; i < options.size(); ++i)
      if (options[i] == content) return static_cast<int>(i);
    return -1;
  };
  std::vector<std::pair<std::string, int>> votes;
  votes.reserve(responses.size());
  for (const auto& r : responses) votes.emplace_back(r.tool_name, option_index(r.content));
  std::sort(votes.begin(), votes.end());

  bool all_same = true;
  for (const auto& v : votes) {
    if (v.second != votes.front().second || v.second < 0) all_same = false;
  }
  if (all_same) {
    p.kind = ResponsePattern::Kind::agree;
    p.agree_option = votes.front().second;
  } else {
    p.kind = ResponsePattern::Kind::conflict;
    p.votes = std::move(votes);
  }
  return p;
}

}  // namespace trustrl
