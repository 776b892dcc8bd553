// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "trustrl/episode.hpp"
#include "trustrl/policy.hpp"

namespace trustrl {

struct GrpoConfig {
  int group_size = 8;
  double clip_epsilon = 0.2;
  double kl_coeff = 0.01;
  double std_floor = 1e-8;
  int steps = 100;
  int batch_queries = 80;
  double learning_rate = 0.1;

  enum class SampleSource { old_policy, ref_policy };
  SampleSource sample_source = SampleSource::old_policy;

  // true: per-trajectory terms are normalized by the masked-step count;
  // false: by the total step count (masking still applies to the sums).
  bool normalize_by_masked = true;

  void validate() const;  // throws config_error naming the field
};

// One query's sampled group with its rewards and broadcast advantages.
struct GroupBatch {
  const QuerySample* query = nullptr;
  std::vector<Trajectory> trajectories;
  std::vector<double> rewards;     // trajectory totals
  std::vector<double> advantages;  // one scalar per trajectory
};

// (R_i - mean) / max(population std, std_floor); all-equal groups get zeros.
std::vector<double> compute_advantages(const std::vector<double>& rewards, double std_floor);

using GradTable = LogitTable;

// Clipped surrogate with KL penalty, masked to policy steps:
//   J = (1/G) Σ_i (1/D_i) Σ_{masked t} [ min(r·Â_i, clip(r, 1±ε)·Â_i) − β·KL_t ]
// where r = exp(logπ_live − logπ_old) and KL_t = KL(live ‖ ref) at the step's
// observation. Throws snapshot_mismatch if stored log-probs disagree with the
// old params beyond 1e-9.
double surrogate_objective(const GroupBatch& batch, const PolicyParams& live,
                           const PolicyParams& old_params, const PolicyParams& ref,
                           const GrpoConfig& cfg);

// Exact gradient of surrogate_objective w.r.t. the live logits. Tool-response
// steps contribute nothing.
GradTable surrogate_gradient(const GroupBatch& batch, const PolicyParams& live,
                             const PolicyParams& old_params, const PolicyParams& ref,
                             const GrpoConfig& cfg);

struct StepMetrics {
  int step = 0;
  double mean_reward = 0.0;
  double accuracy = 0.0;
  std::optional<double> selection_accuracy;  // absent when no resolvable conflicts
  double mean_kl = 0.0;
  long long wall_ms = 0;
};

struct TrainResult {
  PolicyParams params;
  std::vector<StepMetrics> history;
};

// One update per batch: snapshot the generating policy, roll out G episodes
// per query, score, normalize advantages within each group, and ascend the
// summed per-group gradients. Fully deterministic given the seed (wall_ms is
// 0 unless record_timing).
TrainResult train(const std::vector<QuerySample>& dataset, const ToolRegistry& tools,
                  const GrpoConfig& cfg, uint64_t seed,
                  const std::function<void(const StepMetrics&)>& on_step = {},
                  bool record_timing = true);

struct TypeMetrics {
  double accuracy = 0.0;
  int n = 0;
  std::optional<double> selection_accuracy;
  int n_conflicts = 0;  // resolvable conflicts: tools disagreed, one was right
};

struct EvalMetrics {
  double accuracy = 0.0;
  int n = 0;
  std::optional<double> selection_accuracy;
  int n_conflicts = 0;
  std::map<std::string, TypeMetrics> per_type;
};

// Greedy evaluation; selection accuracy is measured over episodes where at
// least two tools answered, disagreed, and at least one was correct.
EvalMetrics evaluate(const std::vector<QuerySample>& dataset, const PolicyParams& policy,
                     const ToolRegistry& tools, uint64_t seed);

// CSV schema: step,mean_reward,accuracy,selection_accuracy,mean_kl,wall_ms
std::string metrics_csv(const std::vector<StepMetrics>& history);
std::string metrics_csv_row(const StepMetrics& m);
std::string metrics_csv_header();

}  // namespace trustrl
