// SPDX-License-Identifier: Apache-2.0
#include "trustrl/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace trustrl {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

void reject_unknown_keys(const json& j, const std::set<std::string>& known,
                         const std::string& prefix) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!known.count(key))
      throw config_error(prefix.empty() ? key : prefix + "." + key, "unknown key");
  }
}

template <typename T>
T get_field(const json& j, const std::string& key, const std::string& prefix, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw config_error(prefix.empty() ? key : prefix + "." + key, "wrong type");
  }
}

ExpertiseProfile parse_profile(const json& j, const std::string& prefix) {
  reject_unknown_keys(j, {"tool_name", "accuracy"}, prefix);
  ExpertiseProfile p;
  if (!j.contains("tool_name") || !j.at("tool_name").is_string())
    throw config_error(prefix + ".tool_name", "required string");
  p.tool_name = j.at("tool_name").get<std::string>();
  if (!j.contains("accuracy") || !j.at("accuracy").is_object())
    throw config_error(prefix + ".accuracy", "required object of type->probability");
  for (const auto& [type, prob] : j.at("accuracy").items()) {
    if (!prob.is_number())
      throw config_error(prefix + ".accuracy." + type, "must be a number");
    const double v = prob.get<double>();
    if (v < 0.0 || v > 1.0)
      throw config_error(prefix + ".accuracy." + type, "must be in [0, 1]");
    p.accuracy[type] = v;
  }
  return p;
}

ToolConfig parse_tool_config(const json& j, const std::string& prefix) {
  ToolConfig tc;
  reject_unknown_keys(j, {"tool_name", "accuracy", "endpoints"}, prefix);
  json profile_only = j;
  profile_only.erase("endpoints");
  tc.profile = parse_profile(profile_only, prefix);
  if (j.contains("endpoints")) {
    const auto& e = j.at("endpoints");
    if (e.is_number_integer()) {
      tc.endpoint_count = e.get<int>();
      if (tc.endpoint_count < 1) throw config_error(prefix + ".endpoints", "must be >= 1");
    } else if (e.is_array()) {
      for (const auto& addr : e) {
        if (!addr.is_string()) throw config_error(prefix + ".endpoints", "must be strings");
        tc.endpoint_addresses.push_back(addr.get<std::string>());
      }
      if (tc.endpoint_addresses.empty())
        throw config_error(prefix + ".endpoints", "must be non-empty");
    } else {
      throw config_error(prefix + ".endpoints", "must be a count or an address list");
    }
  }
  return tc;
}

DatasetSpec parse_dataset_spec(const json& j, const std::string& prefix) {
  reject_unknown_keys(j, {"types", "type_weights", "n_options", "n_samples", "seed"}, prefix);
  DatasetSpec spec;
  spec.types = get_field<std::vector<std::string>>(j, "types", prefix, {});
  spec.type_weights = get_field<std::vector<double>>(j, "type_weights", prefix, {});
  spec.n_options = get_field<int>(j, "n_options", prefix, 4);
  spec.n_samples = get_field<int>(j, "n_samples", prefix, 0);
  return spec;
}

GrpoConfig parse_grpo(const json& j, const std::string& prefix) {
  reject_unknown_keys(j,
                      {"group_size", "clip_epsilon", "kl_coeff", "std_floor", "steps",
                       "batch_queries", "learning_rate", "sample_source",
                       "normalize_by_masked"},
                      prefix);
  GrpoConfig g;
  g.group_size = get_field<int>(j, "group_size", prefix, g.group_size);
  g.clip_epsilon = get_field<double>(j, "clip_epsilon", prefix, g.clip_epsilon);
  g.kl_coeff = get_field<double>(j, "kl_coeff", prefix, g.kl_coeff);
  g.std_floor = get_field<double>(j, "std_floor", prefix, g.std_floor);
  g.steps = get_field<int>(j, "steps", prefix, g.steps);
  g.batch_queries = get_field<int>(j, "batch_queries", prefix, g.batch_queries);
  g.learning_rate = get_field<double>(j, "learning_rate", prefix, g.learning_rate);
  g.normalize_by_masked =
      get_field<bool>(j, "normalize_by_masked", prefix, g.normalize_by_masked);
  const std::string source = get_field<std::string>(j, "sample_source", prefix, "old");
  if (source == "old") {
    g.sample_source = GrpoConfig::SampleSource::old_policy;
  } else if (source == "ref") {
    g.sample_source = GrpoConfig::SampleSource::ref_policy;
  } else {
    throw config_error(prefix + ".sample_source", "must be \"old\" or \"ref\"");
  }
  return g;
}

}  // namespace

RunConfig parse_run_config_json(const std::string& json_text) {
  auto j = json::parse(json_text, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    throw config_error("<root>", "config must be a JSON object");
  reject_unknown_keys(j, {"seed", "out_dir", "dataset", "tools", "grpo", "record_timing"}, "");

  RunConfig cfg;
  cfg.seed = get_field<uint64_t>(j, "seed", "", cfg.seed);
  cfg.out_dir = get_field<std::string>(j, "out_dir", "", cfg.out_dir);
  cfg.record_timing = get_field<bool>(j, "record_timing", "", cfg.record_timing);

  if (j.contains("dataset")) {
    const auto& d = j.at("dataset");
    if (!d.is_object()) throw config_error("dataset", "must be an object");
    reject_unknown_keys(d, {"path", "synthetic"}, "dataset");
    if (d.contains("path") == d.contains("synthetic"))
      throw config_error("dataset", "must set exactly one of \"path\" or \"synthetic\"");
    if (d.contains("path")) {
      cfg.dataset_path = get_field<std::string>(d, "path", "dataset", "");
    } else {
      SyntheticConfig sc;
      sc.spec = parse_dataset_spec(d.at("synthetic"), "dataset.synthetic");
      if (d.at("synthetic").contains("seed"))
        sc.seed = d.at("synthetic").at("seed").get<uint64_t>();
      cfg.synthetic = std::move(sc);
    }
  }

  if (j.contains("tools")) {
    if (!j.at("tools").is_array()) throw config_error("tools", "must be an array");
    size_t i = 0;
    for (const auto& t : j.at("tools")) {
      cfg.tools.push_back(parse_tool_config(t, "tools[" + std::to_string(i) + "]"));
      ++i;
    }
  }

  if (j.contains("grpo")) {
    if (!j.at("grpo").is_object()) throw config_error("grpo", "must be an object");
    cfg.grpo = parse_grpo(j.at("grpo"), "grpo");
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("<file>", "cannot open config: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config_json(ss.str());
}

void validate_run_config(const RunConfig& cfg) {
  cfg.grpo.validate();
  if (!cfg.dataset_path && !cfg.synthetic)
    throw config_error("dataset", "a dataset path or synthetic spec is required");
  if (cfg.synthetic) validate_dataset_spec(cfg.synthetic->spec);
  std::set<std::string> names;
  for (const auto& t : cfg.tools) {
    if (t.profile.tool_name.empty()) throw config_error("tools", "tool_name must be non-empty");
    if (!names.insert(t.profile.tool_name).second)
      throw config_error("tools", "duplicate tool_name " + t.profile.tool_name);
  }
  if (cfg.out_dir.empty()) throw config_error("out_dir", "must be non-empty");
}

std::string resolved_config_json(const RunConfig& cfg) {
  ordered_json j;
  j["seed"] = cfg.seed;
  j["out_dir"] = cfg.out_dir;
  ordered_json d = ordered_json::object();
  if (cfg.dataset_path) {
    d["path"] = *cfg.dataset_path;
  } else if (cfg.synthetic) {
    ordered_json s;
    s["types"] = cfg.synthetic->spec.types;
    s["type_weights"] = cfg.synthetic->spec.type_weights;
    s["n_options"] = cfg.synthetic->spec.n_options;
    s["n_samples"] = cfg.synthetic->spec.n_samples;
    s["seed"] = cfg.synthetic->seed ? *cfg.synthetic->seed : derive_seed(cfg.seed, "dataset");
    d["synthetic"] = std::move(s);
  }
  j["dataset"] = std::move(d);

  ordered_json tools = ordered_json::array();
  for (const auto& t : cfg.tools) {
    ordered_json tj;
    tj["tool_name"] = t.profile.tool_name;
    ordered_json acc = ordered_json::object();
    for (const auto& [type, p] : t.profile.accuracy) acc[type] = p;
    tj["accuracy"] = std::move(acc);
    if (!t.endpoint_addresses.empty()) {
      tj["endpoints"] = t.endpoint_addresses;
    } else {
      tj["endpoints"] = t.endpoint_count;
    }
    tools.push_back(std::move(tj));
  }
  j["tools"] = std::move(tools);

  ordered_json g;
  g["group_size"] = cfg.grpo.group_size;
  g["clip_epsilon"] = cfg.grpo.clip_epsilon;
  g["kl_coeff"] = cfg.grpo.kl_coeff;
  g["std_floor"] = cfg.grpo.std_floor;
  g["steps"] = cfg.grpo.steps;
  g["batch_queries"] = cfg.grpo.batch_queries;
  g["learning_rate"] = cfg.grpo.learning_rate;
  g["sample_source"] =
      cfg.grpo.sample_source == GrpoConfig::SampleSource::old_policy ? "old" : "ref";
  g["normalize_by_masked"] = cfg.grpo.normalize_by_masked;
  j["grpo"] = std::move(g);
  j["record_timing"] = cfg.record_timing;
  return j.dump(2) + "\n";
}

void apply_overrides(RunConfig& cfg, const ConfigOverrides& o) {
  if (o.seed) cfg.seed = *o.seed;
  if (o.out_dir) cfg.out_dir = *o.out_dir;
  if (o.steps) cfg.grpo.steps = *o.steps;
  if (o.group_size) cfg.grpo.group_size = *o.group_size;
  if (o.clip_epsilon) cfg.grpo.clip_epsilon = *o.clip_epsilon;
  if (o.kl_coeff) cfg.grpo.kl_coeff = *o.kl_coeff;
}

ToolRegistry build_registry(const std::vector<ToolConfig>& tools) {
  ToolRegistry registry;
  for (const auto& t : tools) {
    std::vector<std::string> endpoints = t.endpoint_addresses.empty()
                                             ? local_endpoints(t.endpoint_count)
                                             : t.endpoint_addresses;
    registry.register_tool(t.profile, EndpointPool(t.profile.tool_name, std::move(endpoints)));
  }
  return registry;
}

std::vector<QuerySample> resolve_dataset(const RunConfig& cfg) {
  if (cfg.dataset_path) return load_dataset(*cfg.dataset_path);
  const uint64_t seed =
      cfg.synthetic->seed ? *cfg.synthetic->seed : derive_seed(cfg.seed, "dataset");
  return generate_dataset(cfg.synthetic->spec, seed);
}

std::vector<ExpertiseProfile> load_profiles(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("<file>", "cannot open profiles: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw config_error("<file>", std::string("malformed profiles JSON: ") + e.what());
  }
  if (!j.is_array()) throw config_error("<root>", "profiles file must be a JSON array");
  std::vector<ExpertiseProfile> profiles;
  size_t i = 0;
  for (const auto& p : j) {
    profiles.push_back(parse_profile(p, "[" + std::to_string(i) + "]"));
    ++i;
  }
  return profiles;
}

std::string profiles_json(const std::vector<ExpertiseProfile>& profiles) {
  ordered_json arr = ordered_json::array();
  for (const auto& p : profiles) {
    ordered_json j;
    j["tool_name"] = p.tool_name;
    ordered_json acc = ordered_json::object();
    for (const auto& [type, prob] : p.accuracy) acc[type] = prob;
    j["accuracy"] = std::move(acc);
    arr.push_back(std::move(j));
  }
  return arr.dump(2) + "\n";
}

}  // namespace trustrl
