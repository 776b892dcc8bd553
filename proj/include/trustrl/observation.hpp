// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <utility>
#include <vector>

namespace trustrl {

struct ToolResponse;

enum class Phase { pre_tools, post_tools };

// Categorical summary of the tool outputs visible to the policy at the
// answer-selection step. Option identities are kept only when two or more
// responses are present: agreement keeps the consensus option, conflicts keep
// the full tool→option attribution. A lone response is summarized as the bare
// "single" category, and the direct-answer path (no calls) as "no_tools".
struct ResponsePattern {
  enum class Kind { none, no_tools, single, agree, conflict };

  Kind kind = Kind::none;
  int agree_option = -1;                              // Kind::agree
  std::vector<std::pair<std::string, int>> votes;     // Kind::conflict, sorted; -1 = unmatched

  std::string encode() const;

  bool operator==(const ResponsePattern&) const = default;
};

struct Observation {
  std::string query_type;
  Phase phase = Phase::pre_tools;
  ResponsePattern pattern;
  int num_options = 0;  // legal answer actions in the post phase

  // Canonical row key, stable across runs.
  std::string key() const;

  bool operator==(const Observation&) const = default;
};

Observation pre_tools_observation(const std::string& query_type, int num_options);
Observation post_tools_observation(const std::string& query_type, int num_options,
                                   ResponsePattern pattern);

// Collapses tool responses to a ResponsePattern; response contents are matched
// exactly against the option list, unmatched contents vote as index -1.
ResponsePattern summarize_responses(const std::vector<ToolResponse>& responses,
                                    const std::vector<std::string>& options);

}  // namespace trustrl
