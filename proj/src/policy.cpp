// SPDX-License-Identifier: Apache-2.0
#include "trustrl/policy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "trustrl/tools.hpp"

namespace trustrl {

std::vector<std::string> enumerate_invoke_actions(const std::vector<std::string>& tool_names) {
  std::vector<std::string> sorted = tool_names;
  std::sort(sorted.begin(), sorted.end());
  const size_t n = sorted.size();
  std::vector<std::string> actions;
  actions.reserve(size_t{1} << n);
  for (size_t mask = 0; mask < (size_t{1} << n); ++mask) {
    if (mask == 0) {
      actions.emplace_back("answer");
      continue;
    }
    std::string label = "call:";
    bool first = true;
    for (size_t i = 0; i < n; ++i) {
      if (!(mask & (size_t{1} << i))) continue;
      if (!first) label += "+";
      label += sorted[i];
      first = false;
    }
    actions.push_back(std::move(label));
  }
  return actions;
}

std::vector<std::string> invoke_action_tools(const std::string& action) {
  if (action == "answer") return {};
  constexpr std::string_view prefix = "call:";
  if (action.rfind(prefix, 0) != 0) throw error("bad invoke action label: " + action);
  std::vector<std::string> tools;
  std::string rest = action.substr(prefix.size());
  size_t pos = 0;
  while (pos <= rest.size()) {
    size_t plus = rest.find('+', pos);
    if (plus == std::string::npos) {
      tools.push_back(rest.substr(pos));
      break;
    }
    tools.push_back(rest.substr(pos, plus - pos));
    pos = plus + 1;
  }
  return tools;
}

std::string option_action_label(size_t index) { return "option_" + std::to_string(index); }

size_t option_action_index(const std::string& action) {
  constexpr std::string_view prefix = "option_";
  if (action.rfind(prefix, 0) != 0) throw error("bad option action label: " + action);
  return std::stoul(action.substr(prefix.size()));
}

std::vector<std::string> PolicyParams::legal_actions(const Observation& obs) const {
  if (obs.phase == Phase::pre_tools) {
    if (invoke_actions_.empty())
      throw unknown_observation("no invoke action space configured for " + obs.key());
    return invoke_actions_;
  }
  if (obs.num_options < 2)
    throw unknown_observation("post-phase observation with fewer than 2 options: " + obs.key());
  std::vector<std::string> actions;
  actions.reserve(static_cast<size_t>(obs.num_options));
  for (int i = 0; i < obs.num_options; ++i) actions.push_back(option_action_label(i));
  return actions;
}

const std::map<std::string, double>* PolicyParams::find_row(const std::string& key) const {
  auto it = logits_.find(key);
  return it == logits_.end() ? nullptr : &it->second;
}

std::vector<double> PolicyParams::action_distribution(const Observation& obs) const {
  const auto actions = legal_actions(obs);
  const auto* row = find_row(obs.key());

  std::vector<double> logits(actions.size(), 0.0);
  if (row != nullptr) {
    for (size_t i = 0; i < actions.size(); ++i) {
      auto it = row->find(actions[i]);
      if (it != row->end()) logits[i] = it->second;
    }
  }
  double max_logit = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  std::vector<double> probs(actions.size());
  for (size_t i = 0; i < actions.size(); ++i) {
    probs[i] = std::exp(logits[i] - max_logit);
    sum += probs[i];
  }
  for (auto& p : probs) p /= sum;
  return probs;
}

SampleResult PolicyParams::sample_action(const Observation& obs, Rng& rng) const {
  const auto actions = legal_actions(obs);
  const auto probs = action_distribution(obs);
  const double u = rng.next_real();
  double acc = 0.0;
  size_t idx = probs.size() - 1;
  for (size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) {
      idx = i;
      break;
    }
  }
  return {actions[idx], idx, std::log(probs[idx])};
}

SampleResult PolicyParams::greedy_action(const Observation& obs) const {
  const auto actions = legal_actions(obs);
  const auto probs = action_distribution(obs);
  size_t idx = 0;
  for (size_t i = 1; i < probs.size(); ++i)
    if (probs[i] > probs[idx]) idx = i;
  return {actions[idx], idx, std::log(probs[idx])};
}

double PolicyParams::log_prob_of(const Observation& obs, const std::string& action) const {
  const auto actions = legal_actions(obs);
  const auto probs = action_distribution(obs);
  for (size_t i = 0; i < actions.size(); ++i)
    if (actions[i] == action) return std::log(probs[i]);
  throw unknown_observation("action '" + action + "' is not legal for " + obs.key());
}

void PolicyParams::ensure_row(const Observation& obs) {
  const auto actions = legal_actions(obs);
  auto& row = logits_[obs.key()];
  for (const auto& a : actions) row.try_emplace(a, 0.0);
}

void PolicyParams::add_to_logit(const std::string& key, const std::string& action,
                                double delta) {
  logits_[key][action] += delta;
}

void PolicyParams::set_logit(const std::string& key, const std::string& action, double value) {
  logits_[key][action] = value;
}

double kl_divergence(const PolicyParams& p, const PolicyParams& q, const Observation& obs) {
  if (obs.phase == Phase::pre_tools && p.invoke_actions() != q.invoke_actions())
    throw unknown_observation("policies have different invoke action spaces");
  const auto pp = p.action_distribution(obs);
  const auto qq = q.action_distribution(obs);
  double kl = 0.0;
  for (size_t i = 0; i < pp.size(); ++i) kl += pp[i] * (std::log(pp[i]) - std::log(qq[i]));
  return kl;
}

PolicyParams snapshot(const PolicyParams& params) { return params; }

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json profile_to_json(const ExpertiseProfile& p) {
  ordered_json j;
  j["tool_name"] = p.tool_name;
  ordered_json acc = ordered_json::object();
  for (const auto& [type, prob] : p.accuracy) acc[type] = prob;
  j["accuracy"] = std::move(acc);
  return j;
}

ExpertiseProfile profile_from_json(const nlohmann::json& j) {
  ExpertiseProfile p;
  p.tool_name = j.at("tool_name").get<std::string>();
  for (const auto& [type, prob] : j.at("accuracy").items())
    p.accuracy[type] = prob.get<double>();
  return p;
}

}  // namespace

void save_checkpoint(const PolicyParams& params, const CheckpointMeta& meta,
                     const std::string& path) {
  ordered_json j;
  ordered_json m;
  m["step_count"] = meta.step_count;
  m["seed"] = meta.seed;
  m["invoke_actions"] = params.invoke_actions();
  ordered_json profiles = ordered_json::array();
  for (const auto& p : meta.tool_profiles) profiles.push_back(profile_to_json(p));
  m["tool_profiles"] = std::move(profiles);
  j["meta"] = std::move(m);

  ordered_json rows = ordered_json::object();
  for (const auto& [key, row] : params.logits()) {
    ordered_json r = ordered_json::object();
    for (const auto& [action, logit] : row) r[action] = logit;
    rows[key] = std::move(r);
  }
  j["logits"] = std::move(rows);

  std::ofstream out(path);
  if (!out) throw error("cannot write checkpoint: " + path);
  out << j.dump(2) << "\n";
}

std::pair<PolicyParams, CheckpointMeta> load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw error("cannot open checkpoint: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw error("malformed checkpoint " + path + ": " + e.what());
  }
  try {
    const auto& m = j.at("meta");
    CheckpointMeta meta;
    meta.step_count = m.at("step_count").get<uint64_t>();
    meta.seed = m.at("seed").get<uint64_t>();
    for (const auto& p : m.at("tool_profiles")) meta.tool_profiles.push_back(profile_from_json(p));

    PolicyParams params(m.at("invoke_actions").get<std::vector<std::string>>());
    params.step_count = meta.step_count;
    params.seed = meta.seed;
    for (const auto& [key, row] : j.at("logits").items())
      for (const auto& [action, logit] : row.items())
        params.set_logit(key, action, logit.get<double>());
    return {std::move(params), std::move(meta)};
  } catch (const nlohmann::json::exception& e) {
    throw error("malformed checkpoint " + path + ": " + e.what());
  }
}

}  // namespace trustrl
