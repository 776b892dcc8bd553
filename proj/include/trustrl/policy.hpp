// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "trustrl/errors.hpp"
#include "trustrl/observation.hpp"
#include "trustrl/rng.hpp"

namespace trustrl {

struct ExpertiseProfile;

using LogitTable = std::map<std::string, std::map<std::string, double>>;

struct SampleResult {
  std::string action;
  size_t index = 0;
  double log_prob = 0.0;
};

// All invoke-set choices for the pre-tools phase: "answer" plus every
// non-empty subset of the (sorted) tool names, e.g. "call:tool_a+tool_b".
std::vector<std::string> enumerate_invoke_actions(const std::vector<std::string>& tool_names);

// Tools named by an invoke action; empty for "answer".
std::vector<std::string> invoke_action_tools(const std::string& action);

std::string option_action_label(size_t index);
size_t option_action_index(const std::string& action);  // throws error on bad label

// Tabular softmax policy over observation keys. Rows are created lazily at
// zero logits; a missing row is semantically a zero row (uniform over the
// legal actions), so frozen snapshots answer first-seen observations too.
class PolicyParams {
 public:
  PolicyParams() = default;
  explicit PolicyParams(std::vector<std::string> invoke_actions)
      : invoke_actions_(std::move(invoke_actions)) {}

  const LogitTable& logits() const { return logits_; }
  const std::vector<std::string>& invoke_actions() const { return invoke_actions_; }
  uint64_t step_count = 0;
  uint64_t seed = 0;

  // Legal action labels for obs, in canonical order. Throws
  // unknown_observation when obs is not valid for this action space.
  std::vector<std::string> legal_actions(const Observation& obs) const;

  // Softmax over the row; sums to 1 within 1e-12, full support.
  std::vector<double> action_distribution(const Observation& obs) const;

  SampleResult sample_action(const Observation& obs, Rng& rng) const;
  SampleResult greedy_action(const Observation& obs) const;  // first-max tie-break
  double log_prob_of(const Observation& obs, const std::string& action) const;

  // Materializes the zero row (no-op if present).
  void ensure_row(const Observation& obs);
  void add_to_logit(const std::string& key, const std::string& action, double delta);
  void set_logit(const std::string& key, const std::string& action, double value);

 private:
  const std::map<std::string, double>* find_row(const std::string& key) const;

  LogitTable logits_;
  std::vector<std::string> invoke_actions_;
};

// Exact categorical KL(p || q) over the legal action set of obs.
double kl_divergence(const PolicyParams& p, const PolicyParams& q, const Observation& obs);

// Immutable deep copy; later updates to the live params do not affect it.
PolicyParams snapshot(const PolicyParams& params);

struct CheckpointMeta {
  uint64_t step_count = 0;
  uint64_t seed = 0;
  std::vector<ExpertiseProfile> tool_profiles;
};

void save_checkpoint(const PolicyParams& params, const CheckpointMeta& meta,
                     const std::string& path);
std::pair<PolicyParams, CheckpointMeta> load_checkpoint(const std::string& path);

}  // namespace trustrl
