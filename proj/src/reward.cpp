// SPDX-License-Identifier: Apache-2.0
#include "trustrl/reward.hpp"

#include <cctype>

#include "trustrl/dataset.hpp"
#include "trustrl/protocol.hpp"

namespace trustrl {

std::string canonicalize_answer(const std::string& text) {
  size_t b = 0, e = text.size();
  while (b < e && std::isspace(static_cast<unsigned char>(text[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(text[e - 1]))) --e;
  std::string out;
  out.reserve(e - b);
  for (size_t i = b; i < e; ++i)
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(text[i]))));
  return out;
}

RewardBreakdown score(const RolloutText& rollout, const QuerySample& query) {
  RewardBreakdown r;
  if (auto answer = extract_final_answer(rollout)) {
    if (canonicalize_answer(answer->text) == canonicalize_answer(query.ground_truth))
      r.outcome = 1.0;
  }
  if (check_answer_format(rollout)) r.answer_format = 0.1;
  if (check_tool_call_format(rollout)) r.tool_format = 0.1;
  return r;
}

}  // namespace trustrl
