// SPDX-License-Identifier: Apache-2.0
#include "trustrl/commands.hpp"

#include <chrono>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <memory>
#include <ostream>
#include <thread>
#include <vector>

#include <json.hpp>

#include "trustrl/tool_server.hpp"

namespace trustrl {

namespace {

namespace fs = std::filesystem;

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw error("cannot write " + path.string());
  out << content;
}

nlohmann::ordered_json eval_metrics_json(const EvalMetrics& m) {
  nlohmann::ordered_json j;
  j["accuracy"] = m.accuracy;
  if (m.selection_accuracy) {
    j["selection_accuracy"] = *m.selection_accuracy;
  } else {
    j["selection_accuracy"] = nullptr;
  }
  j["n"] = m.n;
  j["n_conflicts"] = m.n_conflicts;
  nlohmann::ordered_json per_type = nlohmann::ordered_json::object();
  for (const auto& [type, tm] : m.per_type) {
    nlohmann::ordered_json tj;
    tj["accuracy"] = tm.accuracy;
    tj["n"] = tm.n;
    if (tm.selection_accuracy) {
      tj["selection_accuracy"] = *tm.selection_accuracy;
    } else {
      tj["selection_accuracy"] = nullptr;
    }
    tj["n_conflicts"] = tm.n_conflicts;
    per_type[type] = std::move(tj);
  }
  j["per_type"] = std::move(per_type);
  return j;
}

}  // namespace

int cmd_train(const RunConfig& cfg, std::ostream& err) {
  try {
    validate_run_config(cfg);
  } catch (const config_error& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  }
  try {
    const std::vector<QuerySample> dataset = resolve_dataset(cfg);
    ToolRegistry registry = build_registry(cfg.tools);

    fs::create_directories(cfg.out_dir);
    write_file(fs::path(cfg.out_dir) / "resolved_config.json", resolved_config_json(cfg));

    TrainResult result =
        train(dataset, registry, cfg.grpo, cfg.seed, {}, cfg.record_timing);

    write_file(fs::path(cfg.out_dir) / "metrics.csv", metrics_csv(result.history));

    CheckpointMeta meta;
    meta.step_count = result.params.step_count;
    meta.seed = cfg.seed;
    for (const auto& t : cfg.tools) meta.tool_profiles.push_back(t.profile);
    save_checkpoint(result.params, meta, (fs::path(cfg.out_dir) / "checkpoint.json").string());
    return 0;
  } catch (const config_error& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_eval(const std::string& checkpoint_path, const std::string& dataset_path,
             uint64_t seed, std::ostream& out, std::ostream& err) {
  PolicyParams params;
  CheckpointMeta meta;
  try {
    std::tie(params, meta) = load_checkpoint(checkpoint_path);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  try {
    const std::vector<QuerySample> dataset = load_dataset(dataset_path);
    if (dataset.empty()) {
      err << "error: dataset is empty, nothing to evaluate\n";
      return 2;
    }
    ToolRegistry registry;
    for (const auto& profile : meta.tool_profiles)
      registry.register_tool(profile, EndpointPool(profile.tool_name, local_endpoints(1)));
    const EvalMetrics metrics = evaluate(dataset, params, registry, seed);
    out << eval_metrics_json(metrics).dump(2) << "\n";
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_gen_dataset(const DatasetSpec& spec, uint64_t seed, const std::string& out_path,
                    std::ostream& err) {
  try {
    const auto samples = generate_dataset(spec, seed);
    save_dataset(samples, out_path);
    return 0;
  } catch (const config_error& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_serve_tools(const ServeOptions& options, const volatile sig_atomic_t* stop,
                    std::ostream& out, std::ostream& err) {
  std::vector<ExpertiseProfile> profiles;
  try {
    profiles = load_profiles(options.profiles_path);
    if (profiles.empty()) throw config_error("<root>", "no profiles to serve");
    if (options.instances < 1) throw config_error("instances", "must be >= 1");
  } catch (const std::exception& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  }

  std::vector<std::unique_ptr<ToolServer>> servers;
  uint16_t next_port = options.base_port;
  try {
    for (const auto& profile : profiles) {
      for (int i = 0; i < options.instances; ++i) {
        auto server = std::make_unique<ToolServer>(std::vector<ExpertiseProfile>{profile},
                                                   options.host, next_port);
        server->start();
        if (options.base_port != 0) ++next_port;
        out << profile.tool_name << ": listening on " << server->endpoint() << "\n";
        servers.push_back(std::move(server));
      }
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  out.flush();

  while (!*stop) std::this_thread::sleep_for(std::chrono::milliseconds(50));
  for (auto& server : servers) server->stop();
  out << "shutdown complete\n";
  return 0;
}

}  // namespace trustrl
