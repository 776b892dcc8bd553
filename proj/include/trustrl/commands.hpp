// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <csignal>
#include <cstdint>
#include <iosfwd>
#include <string>

#include "trustrl/config.hpp"

namespace trustrl {

// Exit codes: 0 success, 1 runtime failure, 2 config/usage error.

// Runs training and writes resolved_config.json, metrics.csv and
// checkpoint.json to cfg.out_dir.
int cmd_train(const RunConfig& cfg, std::ostream& err);

// Prints JSON metrics for a checkpoint on a dataset.
int cmd_eval(const std::string& checkpoint_path, const std::string& dataset_path,
             uint64_t seed, std::ostream& out, std::ostream& err);

int cmd_gen_dataset(const DatasetSpec& spec, uint64_t seed, const std::string& out_path,
                    std::ostream& err);

struct ServeOptions {
  std::string profiles_path;
  int instances = 1;  // listening endpoints per tool
  std::string host = "127.0.0.1";
  uint16_t base_port = 0;  // 0 = ephemeral ports
};

// Blocks until *stop becomes true (set by a signal handler). Reports each
// listening endpoint on out at startup.
int cmd_serve_tools(const ServeOptions& options, const volatile sig_atomic_t* stop,
                    std::ostream& out, std::ostream& err);

}  // namespace trustrl
