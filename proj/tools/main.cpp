// SPDX-License-Identifier: Apache-2.0
#include <csignal>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "trustrl/commands.hpp"

namespace {

volatile sig_atomic_t g_stop = 0;

void handle_signal(int) { g_stop = 1; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tool-trust agent training over simulated expert tools"};
  app.require_subcommand(1);

  // train
  auto* train = app.add_subcommand("train", "run a training job from a config file");
  std::string config_path;
  train->add_option("--config", config_path, "run config (JSON)")->required();
  trustrl::ConfigOverrides overrides;
  uint64_t seed_flag = 0;
  std::string out_flag;
  int steps_flag = 0, group_flag = 0;
  double clip_flag = 0.0, kl_flag = 0.0;
  auto* seed_opt = train->add_option("--seed", seed_flag, "override seed");
  auto* out_opt = train->add_option("--out", out_flag, "override output directory");
  auto* steps_opt = train->add_option("--steps", steps_flag, "override training steps");
  auto* group_opt = train->add_option("--group-size", group_flag, "override group size");
  auto* clip_opt = train->add_option("--clip-eps", clip_flag, "override clip epsilon");
  auto* kl_opt = train->add_option("--kl-coeff", kl_flag, "override KL coefficient");

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
  std::string checkpoint_path, eval_dataset;
  uint64_t eval_seed = 0;
  eval->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
  eval->add_option("--dataset", eval_dataset, "JSON-lines dataset")->required();
  eval->add_option("--seed", eval_seed, "evaluation seed");

  // gen-dataset
  auto* gen = app.add_subcommand("gen-dataset", "write a synthetic JSON-lines dataset");
  std::vector<std::string> gen_types{"t1", "t2"};
  std::vector<double> gen_weights{0.5, 0.5};
  int gen_options = 4, gen_samples = 1000;
  uint64_t gen_seed = 0;
  std::string gen_out;
  gen->add_option("--types", gen_types, "query type names");
  gen->add_option("--weights", gen_weights, "type weights (sum to 1)");
  gen->add_option("--n-options", gen_options, "options per query");
  gen->add_option("--n-samples", gen_samples, "number of queries");
  gen->add_option("--seed", gen_seed, "generation seed");
  gen->add_option("--out", gen_out, "output path")->required();

  // serve-tools
  auto* serve = app.add_subcommand("serve-tools", "serve simulated tools over TCP");
  trustrl::ServeOptions serve_options;
  int base_port = 0;
  serve->add_option("--profiles", serve_options.profiles_path, "profiles JSON file")->required();
  serve->add_option("--instances", serve_options.instances, "endpoints per tool");
  serve->add_option("--host", serve_options.host, "bind address");
  serve->add_option("--base-port", base_port, "first port (0 = ephemeral)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      trustrl::RunConfig cfg;
      try {
        cfg = trustrl::load_run_config(config_path);
      } catch (const trustrl::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
      }
      if (*seed_opt) overrides.seed = seed_flag;
      if (*out_opt) overrides.out_dir = out_flag;
      if (*steps_opt) overrides.steps = steps_flag;
      if (*group_opt) overrides.group_size = group_flag;
      if (*clip_opt) overrides.clip_epsilon = clip_flag;
      if (*kl_opt) overrides.kl_coeff = kl_flag;
      trustrl::apply_overrides(cfg, overrides);
      return trustrl::cmd_train(cfg, std::cerr);
    }
    if (*eval) {
      return trustrl::cmd_eval(checkpoint_path, eval_dataset, eval_seed, std::cout, std::cerr);
    }
    if (*gen) {
      trustrl::DatasetSpec spec;
      spec.types = gen_types;
      spec.type_weights = gen_weights;
      spec.n_options = gen_options;
      spec.n_samples = gen_samples;
      return trustrl::cmd_gen_dataset(spec, gen_seed, gen_out, std::cerr);
    }
    if (*serve) {
      serve_options.base_port = static_cast<uint16_t>(base_port);
      std::signal(SIGINT, handle_signal);
      std::signal(SIGTERM, handle_signal);
      return trustrl::cmd_serve_tools(serve_options, &g_stop, std::cout, std::cerr);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
