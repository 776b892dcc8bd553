// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "trustrl/dataset.hpp"
#include "trustrl/grpo.hpp"
#include "trustrl/tools.hpp"

namespace trustrl {

// One tool entry: the expertise profile plus its endpoints (a count of
// in-process workers, or explicit "tcp:host:port" addresses).
struct ToolConfig {
  ExpertiseProfile profile;
  int endpoint_count = 1;
  std::vector<std::string> endpoint_addresses;  // non-empty overrides the count
};

struct SyntheticConfig {
  DatasetSpec spec;
  std::optional<uint64_t> seed;  // default: derived from the run seed
};

struct RunConfig {
  uint64_t seed = 0;
  std::string out_dir = "out";
  std::optional<std::string> dataset_path;
  std::optional<SyntheticConfig> synthetic;
  std::vector<ToolConfig> tools;
  GrpoConfig grpo;
  bool record_timing = true;
};

// Strict parsing: unknown keys are rejected with the offending field path.
RunConfig parse_run_config_json(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

// Full effective config; parsing it back reproduces the run.
std::string resolved_config_json(const RunConfig& cfg);

void validate_run_config(const RunConfig& cfg);  // throws config_error

// CLI flag overrides (flags > file > defaults).
struct ConfigOverrides {
  std::optional<uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<int> steps;
  std::optional<int> group_size;
  std::optional<double> clip_epsilon;
  std::optional<double> kl_coeff;
};

void apply_overrides(RunConfig& cfg, const ConfigOverrides& overrides);

// Registry with profiles and endpoint pools as configured.
ToolRegistry build_registry(const std::vector<ToolConfig>& tools);

// Training queries per the config (file or synthetic).
std::vector<QuerySample> resolve_dataset(const RunConfig& cfg);

// Profile-file helpers ({tool_name, accuracy:{type: p, ...}} objects).
std::vector<ExpertiseProfile> load_profiles(const std::string& path);
std::string profiles_json(const std::vector<ExpertiseProfile>& profiles);

}  // namespace trustrl
