// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

namespace trustrl {

struct RolloutText;
struct QuerySample;

// Composite reward: exact-match outcome plus the two format bonuses.
struct RewardBreakdown {
  double outcome = 0.0;        // 0 or 1
  double answer_format = 0.0;  // 0 or 0.1
  double tool_format = 0.0;    // 0 or 0.1

  double total() const { return outcome + answer_format + tool_format; }

  bool operator==(const RewardBreakdown&) const = default;
};

// outcome: extracted final answer exact-matches ground truth after trim +
// ASCII case-fold. answer_format: the final policy segment ends with a
// well-formed answer block. tool_format: every tool_call block in every
// policy segment is well-formed (vacuously true with zero calls).
RewardBreakdown score(const RolloutText& rollout, const QuerySample& query);

// trim + ASCII tolower, the only normalization applied before exact match.
std::string canonicalize_answer(const std::string& text);

}  // namespace trustrl
