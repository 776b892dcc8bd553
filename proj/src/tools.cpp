// SPDX-License-Identifier: Apache-2.0
#include "trustrl/tools.hpp"

#include <algorithm>
#include <future>

#include "trustrl/tool_server.hpp"

namespace trustrl {

EndpointPool::EndpointPool(std::string tool_name, std::vector<std::string> endpoints)
    : tool_name_(std::move(tool_name)), endpoints_(std::move(endpoints)) {
  if (endpoints_.empty()) throw error("endpoint pool for " + tool_name_ + " is empty");
}

EndpointPool::EndpointPool(const EndpointPool& other)
    : tool_name_(other.tool_name_),
      endpoints_(other.endpoints_),
      cursor_(other.cursor_.load()) {}

EndpointPool& EndpointPool::operator=(const EndpointPool& other) {
  tool_name_ = other.tool_name_;
  endpoints_ = other.endpoints_;
  cursor_.store(other.cursor_.load());
  return *this;
}

std::string EndpointPool::next_endpoint() {
  const uint64_t n = endpoints_.size();
  uint64_t cur = cursor_.load();
  while (!cursor_.compare_exchange_weak(cur, (cur + 1) % n)) {
  }
  return endpoints_[cur];
}

std::vector<std::string> local_endpoints(int count) {
  std::vector<std::string> eps;
  for (int i = 0; i < count; ++i) eps.push_back("local:" + std::to_string(i));
  return eps;
}

std::string resolve_image_label(std::string_view label, const ImageContext& ctx) {
  constexpr std::string_view prefix = "Figure ";
  if (label.substr(0, prefix.size()) != prefix)
    throw bad_image_label("expected 'Figure <k>', got '" + std::string(label) + "'");
  std::string_view digits = label.substr(prefix.size());
  if (digits.empty() || digits.size() > 9 || digits[0] == '0' ||
      !std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; }))
    throw bad_image_label("expected 'Figure <k>', got '" + std::string(label) + "'");
  size_t k = 0;
  for (char c : digits) k = k * 10 + static_cast<size_t>(c - '0');
  if (k > ctx.paths.size())
    throw bad_image_label("'" + std::string(label) + "' exceeds the " +
                          std::to_string(ctx.paths.size()) + " available image(s)");
  return ctx.paths[k - 1];
}

ToolResponse simulate_tool(const ExpertiseProfile& profile, const QuerySample& query, Rng& rng) {
  auto it = profile.accuracy.find(query.query_type);
  if (it == profile.accuracy.end())
    throw uncovered_query_type(profile.tool_name, query.query_type);
  const double p = it->second;
  if (rng.next_real() < p) return {profile.tool_name, query.ground_truth};

  std::vector<const std::string*> wrong;
  for (const auto& o : query.options)
    if (o != query.ground_truth) wrong.push_back(&o);
  return {profile.tool_name, *wrong[rng.next_below(wrong.size())]};
}

uint64_t tool_call_seed(uint64_t run_seed, std::string_view query_id,
                        std::string_view tool_name, size_t ordinal) {
  return derive_seed(run_seed, "tool", query_id, tool_name, static_cast<uint64_t>(ordinal));
}

void ToolRegistry::register_tool(ExpertiseProfile profile, EndpointPool pool) {
  register_tool(std::move(profile), std::move(pool), ToolHandler{});
}

void ToolRegistry::register_tool(ExpertiseProfile profile, EndpointPool pool,
                                 ToolHandler handler) {
  const std::string name = profile.tool_name;
  if (name.empty()) throw error("tool name must be non-empty");
  if (entries_.count(name)) throw duplicate_tool(name);
  entries_.emplace(name, Entry{std::move(profile), std::move(pool), std::move(handler)});
}

bool ToolRegistry::contains(const std::string& name) const { return entries_.count(name) > 0; }

const ExpertiseProfile& ToolRegistry::profile(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw unknown_tool(name);
  return it->second.profile;
}

EndpointPool& ToolRegistry::pool(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw unknown_tool(name);
  return it->second.pool;
}

std::vector<std::string> ToolRegistry::tool_names() const {
  std::vector<std::string> names;
  for (const auto& [name, entry] : entries_) {
    (void)entry;
    names.push_back(name);
  }
  return names;
}

namespace {

bool is_remote(const std::string& endpoint) { return endpoint.rfind("tcp:", 0) == 0; }

ToolResponse run_one_call(const ExpertiseProfile& profile, const ToolHandler& handler,
                          const ToolCall& call, DispatchContext ctx) {
  if (auto label = call.image_label())
    ctx.image_path = resolve_image_label(*label, ctx.query->images);
  if (handler) return handler(call, ctx);
  if (is_remote(ctx.endpoint)) return remote_tool_call(ctx.endpoint, call, ctx);
  Rng rng(ctx.call_seed);
  return simulate_tool(profile, *ctx.query, rng);
}

}  // namespace

std::vector<ToolResponse> ToolRegistry::dispatch_parallel(const std::vector<ToolCall>& calls,
                                                          const QuerySample& query,
                                                          uint64_t run_seed) const {
  std::vector<ToolResponse> responses(calls.size());

  struct Prepared {
    const Entry* entry = nullptr;  // null = unknown tool
    DispatchContext ctx;
  };

  // Endpoints are consumed serially in call order; only execution may run
  // concurrently, so results do not depend on scheduling.
  std::vector<Prepared> prepared(calls.size());
  bool any_slow = false;
  for (size_t i = 0; i < calls.size(); ++i) {
    auto& p = prepared[i];
    p.ctx.query = &query;
    p.ctx.ordinal = i;
    p.ctx.call_seed = tool_call_seed(run_seed, query.id, calls[i].tool_name, i);
    auto it = entries_.find(calls[i].tool_name);
    if (it == entries_.end()) continue;
    p.entry = &it->second;
    p.ctx.endpoint = it->second.pool.next_endpoint();
    if (it->second.handler || is_remote(p.ctx.endpoint)) any_slow = true;
  }

  auto execute = [&](size_t i) -> ToolResponse {
    const auto& call = calls[i];
    const auto& p = prepared[i];
    if (p.entry == nullptr)
      return {call.tool_name, std::string("ERROR: ") + unknown_tool(call.tool_name).what()};
    try {
      return run_one_call(p.entry->profile, p.entry->handler, call, p.ctx);
    } catch (const std::exception& e) {
      return {call.tool_name, std::string("ERROR: ") + e.what()};
    }
  };

  // In-process simulated calls are microseconds; threads only pay off when a
  // call can actually block (remote endpoint or custom handler).
  if (calls.size() > 1 && any_slow) {
    std::vector<std::future<ToolResponse>> futures;
    futures.reserve(calls.size());
    for (size_t i = 0; i < calls.size(); ++i)
      futures.push_back(std::async(std::launch::async, execute, i));
    for (size_t i = 0; i < calls.size(); ++i) responses[i] = futures[i].get();
  } else {
    for (size_t i = 0; i < calls.size(); ++i) responses[i] = execute(i);
  }
  return responses;
}

}  // namespace trustrl
