// SPDX-License-Identifier: Apache-2.0
#include "trustrl/grpo.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "trustrl/protocol.hpp"
#include "trustrl/reward.hpp"

namespace trustrl {

void GrpoConfig::validate() const {
  if (group_size < 2) throw config_error("group_size", "must be >= 2");
  if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0))
    throw config_error("clip_epsilon", "must be in (0, 1)");
  if (kl_coeff < 0.0) throw config_error("kl_coeff", "must be >= 0");
  if (!(std_floor > 0.0)) throw config_error("std_floor", "must be > 0");
  if (steps < 0) throw config_error("steps", "must be >= 0");
  if (batch_queries < 1) throw config_error("batch_queries", "must be >= 1");
  if (!(learning_rate >= 0.0)) throw config_error("learning_rate", "must be >= 0");
}

std::vector<double> compute_advantages(const std::vector<double>& rewards, double std_floor) {
  const size_t g = rewards.size();
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= static_cast<double>(g);
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  var /= static_cast<double>(g);  // population variance
  const double denom = std::max(std::sqrt(var), std_floor);

  std::vector<double> advantages(g);
  for (size_t i = 0; i < g; ++i) advantages[i] = (rewards[i] - mean) / denom;
  return advantages;
}

namespace {

double trajectory_normalizer(const Trajectory& traj, const GrpoConfig& cfg) {
  const size_t n = cfg.normalize_by_masked ? traj.masked_step_count() : traj.steps.size();
  return static_cast<double>(n);
}

void check_snapshot(const Step& step, const PolicyParams& old_params) {
  const double recomputed = old_params.log_prob_of(*step.obs, step.action_id);
  if (std::abs(recomputed - step.log_prob) > 1e-9)
    throw snapshot_mismatch("stored log-prob " + std::to_string(step.log_prob) +
                            " vs recomputed " + std::to_string(recomputed) + " for action " +
                            step.action_id);
}

}  // namespace

double surrogate_objective(const GroupBatch& batch, const PolicyParams& live,
                           const PolicyParams& old_params, const PolicyParams& ref,
                           const GrpoConfig& cfg) {
  const double g = static_cast<double>(batch.trajectories.size());
  double total = 0.0;
  for (size_t i = 0; i < batch.trajectories.size(); ++i) {
    const Trajectory& traj = batch.trajectories[i];
    const double adv = batch.advantages.at(i);
    const double norm = trajectory_normalizer(traj, cfg);
    if (norm == 0.0) continue;
    double clip_sum = 0.0;
    double kl_sum = 0.0;
    for (const Step& step : traj.steps) {
      if (step.mask == 0) continue;
      check_snapshot(step, old_params);
      const double lp_live = live.log_prob_of(*step.obs, step.action_id);
      const double ratio = std::exp(lp_live - step.log_prob);
      const double clipped =
          std::clamp(ratio, 1.0 - cfg.clip_epsilon, 1.0 + cfg.clip_epsilon);
      clip_sum += std::min(ratio * adv, clipped * adv);
      if (cfg.kl_coeff != 0.0) kl_sum += kl_divergence(live, ref, *step.obs);
    }
    total += (clip_sum - cfg.kl_coeff * kl_sum) / norm;
  }
  return total / g;
}

GradTable surrogate_gradient(const GroupBatch& batch, const PolicyParams& live,
                             const PolicyParams& old_params, const PolicyParams& ref,
                             const GrpoConfig& cfg) {
  const double g = static_cast<double>(batch.trajectories.size());
  GradTable grad;
  for (size_t i = 0; i < batch.trajectories.size(); ++i) {
    const Trajectory& traj = batch.trajectories[i];
    const double adv = batch.advantages.at(i);
    const double norm = trajectory_normalizer(traj, cfg);
    if (norm == 0.0) continue;
    const double w = 1.0 / (g * norm);
    for (const Step& step : traj.steps) {
      if (step.mask == 0) continue;
      check_snapshot(step, old_params);
      const Observation& obs = *step.obs;
      const std::string key = obs.key();
      const auto actions = live.legal_actions(obs);
      const auto probs = live.action_distribution(obs);
      const double lp_live = std::log(probs.at(step.action_index));
      const double ratio = std::exp(lp_live - step.log_prob);
      const double clipped =
          std::clamp(ratio, 1.0 - cfg.clip_epsilon, 1.0 + cfg.clip_epsilon);

      auto& row = grad[key];
      // d(r·Â)/d logit_b = Â·r·(1{b=a} − p_b); zero where the clipped branch
      // is strictly active (clip(r) constant there).
      if (ratio * adv <= clipped * adv) {
        for (size_t b = 0; b < actions.size(); ++b) {
          const double indicator = b == step.action_index ? 1.0 : 0.0;
          row[actions[b]] += w * adv * ratio * (indicator - probs[b]);
        }
      }
      if (cfg.kl_coeff != 0.0) {
        // dKL(p‖q)/d logit_b = p_b·(ln(p_b/q_b) − KL)
        const auto ref_probs = ref.action_distribution(obs);
        double kl = 0.0;
        for (size_t b = 0; b < probs.size(); ++b)
          kl += probs[b] * (std::log(probs[b]) - std::log(ref_probs[b]));
        for (size_t b = 0; b < actions.size(); ++b) {
          const double dkl = probs[b] * (std::log(probs[b]) - std::log(ref_probs[b]) - kl);
          row[actions[b]] -= w * cfg.kl_coeff * dkl;
        }
      }
    }
  }
  return grad;
}

namespace {

struct RolloutStats {
  bool correct = false;
  bool resolvable_conflict = false;  // >=2 responses, disagreement, one correct
  bool selected_correct = false;
};

RolloutStats rollout_stats(const RolloutText& rollout, const RewardBreakdown& reward,
                           const QuerySample& query) {
  RolloutStats s;
  s.correct = reward.outcome == 1.0;
  const RolloutView view = structured_view(rollout);
  if (view.responses.size() >= 2) {
    bool any_disagree = false;
    bool any_correct = false;
    for (const auto& r : view.responses) {
      if (r.content != view.responses.front().content) any_disagree = true;
      if (r.content == query.ground_truth) any_correct = true;
    }
    if (any_disagree && any_correct) {
      s.resolvable_conflict = true;
      s.selected_correct = s.correct;
    }
  }
  return s;
}

}  // namespace

TrainResult train(const std::vector<QuerySample>& dataset, const ToolRegistry& tools,
                  const GrpoConfig& cfg, uint64_t seed,
                  const std::function<void(const StepMetrics&)>& on_step, bool record_timing) {
  cfg.validate();
  if (dataset.empty()) throw error("training dataset is empty");

  PolicyParams live(enumerate_invoke_actions(tools.tool_names()));
  live.seed = seed;
  const PolicyParams ref = snapshot(live);  // fixed uniform reference

  TrainResult result;
  for (int s = 0; s < cfg.steps; ++s) {
    const auto t0 = std::chrono::steady_clock::now();
    Rng batch_rng(derive_seed(seed, "batch", static_cast<uint64_t>(s)));
    const PolicyParams old_params =
        cfg.sample_source == GrpoConfig::SampleSource::old_policy ? snapshot(live) : ref;

    GradTable total_grad;
    double reward_sum = 0.0;
    int n_rollouts = 0;
    int n_correct = 0;
    int n_conflicts = 0;
    int n_selected = 0;
    double kl_sum = 0.0;
    int kl_count = 0;

    for (int b = 0; b < cfg.batch_queries; ++b) {
      const QuerySample& query = dataset[batch_rng.next_below(dataset.size())];
      GroupBatch batch;
      batch.query = &query;
      for (int gi = 0; gi < cfg.group_size; ++gi) {
        const uint64_t rollout_index =
            (static_cast<uint64_t>(s) * cfg.batch_queries + b) * cfg.group_size + gi;
        Trajectory traj =
            run_episode(query, old_params, tools, seed, rollout_index, EpisodeMode::sample);
        const RolloutText rollout = serialize_rollout(traj);
        const RewardBreakdown breakdown = score(rollout, query);
        traj.reward = breakdown;
        batch.rewards.push_back(breakdown.total());

        reward_sum += breakdown.total();
        ++n_rollouts;
        const RolloutStats stats = rollout_stats(rollout, breakdown, query);
        n_correct += stats.correct;
        n_conflicts += stats.resolvable_conflict;
        n_selected += stats.selected_correct;
        for (const Step& step : traj.steps) {
          if (step.mask == 0) continue;
          kl_sum += kl_divergence(live, ref, *step.obs);
          ++kl_count;
        }
        batch.trajectories.push_back(std::move(traj));
      }
      batch.advantages = compute_advantages(batch.rewards, cfg.std_floor);
      const GradTable grad = surrogate_gradient(batch, live, old_params, ref, cfg);
      for (const auto& [key, row] : grad)
        for (const auto& [action, value] : row) total_grad[key][action] += value;
    }

    for (const auto& [key, row] : total_grad) {
      for (const auto& [action, value] : row) {
        const double delta = cfg.learning_rate * value;
        if (delta != 0.0) live.add_to_logit(key, action, delta);
      }
    }
    live.step_count = static_cast<uint64_t>(s) + 1;

    StepMetrics m;
    m.step = s;
    m.mean_reward = reward_sum / n_rollouts;
    m.accuracy = static_cast<double>(n_correct) / n_rollouts;
    if (n_conflicts > 0)
      m.selection_accuracy = static_cast<double>(n_selected) / n_conflicts;
    m.mean_kl = kl_count > 0 ? kl_sum / kl_count : 0.0;
    if (record_timing) {
      m.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    }
    if (on_step) on_step(m);
    result.history.push_back(m);
  }
  result.params = std::move(live);
  return result;
}

EvalMetrics evaluate(const std::vector<QuerySample>& dataset, const PolicyParams& policy,
                     const ToolRegistry& tools, uint64_t seed) {
  EvalMetrics metrics;
  int n_correct = 0;
  int n_selected = 0;
  std::map<std::string, std::array<int, 4>> per_type;  // correct, n, selected, conflicts

  for (const auto& query : dataset) {
    Trajectory traj = run_episode(query, policy, tools, seed, 0, EpisodeMode::greedy);
    const RolloutText rollout = serialize_rollout(traj);
    const RewardBreakdown breakdown = score(rollout, query);
    const RolloutStats stats = rollout_stats(rollout, breakdown, query);

    auto& t = per_type[query.query_type];
    n_correct += stats.correct;
    t[0] += stats.correct;
    ++t[1];
    if (stats.resolvable_conflict) {
      ++metrics.n_conflicts;
      ++t[3];
      n_selected += stats.selected_correct;
      t[2] += stats.selected_correct;
    }
  }
  metrics.n = static_cast<int>(dataset.size());
  metrics.accuracy = metrics.n > 0 ? static_cast<double>(n_correct) / metrics.n : 0.0;
  if (metrics.n_conflicts > 0)
    metrics.selection_accuracy = static_cast<double>(n_selected) / metrics.n_conflicts;
  for (const auto& [type, counts] : per_type) {
    TypeMetrics tm;
    tm.n = counts[1];
    tm.accuracy = tm.n > 0 ? static_cast<double>(counts[0]) / tm.n : 0.0;
    tm.n_conflicts = counts[3];
    if (tm.n_conflicts > 0)
      tm.selection_accuracy = static_cast<double>(counts[2]) / tm.n_conflicts;
    metrics.per_type[type] = tm;
  }
  return metrics;
}

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

std::string metrics_csv_header() {
  return "step,mean_reward,accuracy,selection_accuracy,mean_kl,wall_ms";
}

std::string metrics_csv_row(const StepMetrics& m) {
  std::string row = std::to_string(m.step);
  row += "," + format_double(m.mean_reward);
  row += "," + format_double(m.accuracy);
  row += ",";
  if (m.selection_accuracy) row += format_double(*m.selection_accuracy);
  row += "," + format_double(m.mean_kl);
  row += "," + std::to_string(m.wall_ms);
  return row;
}

std::string metrics_csv(const std::vector<StepMetrics>& history) {
  std::string out = metrics_csv_header() + "\n";
  for (const auto& m : history) out += metrics_csv_row(m) + "\n";
  return out;
}

}  // namespace trustrl
