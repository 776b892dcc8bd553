// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "trustrl/dataset.hpp"
#include "trustrl/errors.hpp"
#include "trustrl/protocol.hpp"
#include "trustrl/rng.hpp"

namespace trustrl {

enum class DistractorPolicy { uniform_wrong };

// Per-query-type correctness probabilities of a simulated expert, plus the
// rule for drawing a wrong answer when it errs.
struct ExpertiseProfile {
  std::string tool_name;
  std::map<std::string, double> accuracy;  // query type -> probability
  DistractorPolicy distractor = DistractorPolicy::uniform_wrong;
};

// Rotates calls across the instances of one tool. Endpoints may be in-process
// worker ids or "tcp:host:port" addresses; the dispatch contract is the same.
class EndpointPool {
 public:
  EndpointPool(std::string tool_name, std::vector<std::string> endpoints);
  EndpointPool(const EndpointPool& other);
  EndpointPool& operator=(const EndpointPool& other);

  // Returns the endpoint at the cursor and advances it modulo size.
  std::string next_endpoint();

  size_t size() const { return endpoints_.size(); }
  uint64_t cursor() const { return cursor_.load(); }
  const std::vector<std::string>& endpoints() const { return endpoints_; }

 private:
  std::string tool_name_;
  std::vector<std::string> endpoints_;
  std::atomic<uint64_t> cursor_{0};
};

// Builds k in-process endpoint ids ("local:0" .. "local:k-1").
std::vector<std::string> local_endpoints(int count);

// Per-call information handed to a tool handler.
struct DispatchContext {
  const QuerySample* query = nullptr;
  std::string endpoint;
  std::string image_path;  // resolved from the call's image label, if any
  uint64_t call_seed = 0;
  size_t ordinal = 0;
};

using ToolHandler = std::function<ToolResponse(const ToolCall&, const DispatchContext&)>;

// "Figure k" -> ctx.paths[k-1]. The pattern is exactly `Figure <positive
// integer>`, case-sensitive, no leading zeros. Throws bad_image_label.
std::string resolve_image_label(std::string_view label, const ImageContext& ctx);

// Draws the tool's answer: ground truth with probability accuracy[type],
// otherwise a uniformly chosen distractor option. Throws uncovered_query_type.
ToolResponse simulate_tool(const ExpertiseProfile& profile, const QuerySample& query, Rng& rng);

// Seed for one tool call; depends only on (run seed, query id, tool name,
// call ordinal) so neither parallelism nor rollout identity changes outcomes.
uint64_t tool_call_seed(uint64_t run_seed, std::string_view query_id,
                        std::string_view tool_name, size_t ordinal);

class ToolRegistry {
 public:
  // Default handler: simulate in-process, or forward over TCP when the
  // assigned endpoint is a "tcp:" address. Throws duplicate_tool.
  void register_tool(ExpertiseProfile profile, EndpointPool pool);
  // Custom execution behind the same dispatch contract (tests, adapters).
  void register_tool(ExpertiseProfile profile, EndpointPool pool, ToolHandler handler);

  bool contains(const std::string& name) const;
  const ExpertiseProfile& profile(const std::string& name) const;  // throws unknown_tool
  EndpointPool& pool(const std::string& name);                     // throws unknown_tool
  std::vector<std::string> tool_names() const;                     // sorted
  size_t size() const { return entries_.size(); }

  // Executes calls (possibly concurrently); responses come back in call
  // order and each call consumes one endpoint. Failures are rendered as
  // "ERROR: ..." response content, never exceptions.
  std::vector<ToolResponse> dispatch_parallel(const std::vector<ToolCall>& calls,
                                              const QuerySample& query,
                                              uint64_t run_seed) const;

 private:
  struct Entry {
    ExpertiseProfile profile;
    mutable EndpointPool pool;
    ToolHandler handler;  // empty = default behavior
  };
  std::map<std::string, Entry> entries_;
};

}  // namespace trustrl
