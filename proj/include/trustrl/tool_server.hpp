// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <cstdint>
#include <string>
#include <thread>
#include <vector>

#include "trustrl/errors.hpp"

namespace trustrl {

struct ExpertiseProfile;
struct ToolCall;
struct DispatchContext;
struct ToolResponse;

// One listening endpoint. Protocol: the client sends one JSON object per
// connection, {"name": ..., "arguments": {...}}, newline-terminated; the
// server answers one JSON object {"content": ...} and closes. Malformed
// requests get an "ERROR: ..." content; the server stays up.
class ToolServer {
 public:
  // port 0 binds an ephemeral port (see port() after start()).
  ToolServer(std::vector<ExpertiseProfile> profiles, std::string host, uint16_t port);
  ~ToolServer();

  ToolServer(const ToolServer&) = delete;
  ToolServer& operator=(const ToolServer&) = delete;

  void start();  // throws error on bind failure
  void stop();

  uint16_t port() const { return port_; }
  std::string endpoint() const;  // "tcp:host:port"
  uint64_t requests_served() const { return requests_.load(); }

 private:
  void serve_loop();
  std::string handle_request(const std::string& line);

  std::vector<ExpertiseProfile> profiles_;
  std::string host_;
  uint16_t port_;
  int listen_fd_ = -1;
  std::thread thread_;
  std::atomic<bool> running_{false};
  std::atomic<uint64_t> requests_{0};
};

// Client side of the line protocol, used by dispatch for "tcp:" endpoints.
// The request carries the call's visible arguments plus hidden simulation
// fields (seed, query identity, options, ground truth, resolved image path).
ToolResponse remote_tool_call(const std::string& endpoint, const ToolCall& call,
                              const DispatchContext& ctx);

// Low-level one-line exchange; throws error on connection problems.
std::string remote_request_line(const std::string& endpoint, const std::string& line,
                                int timeout_ms = 5000);

}  // namespace trustrl
