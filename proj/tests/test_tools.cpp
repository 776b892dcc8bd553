// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <map>
#include <thread>

#include "trustrl/tools.hpp"

using namespace trustrl;

namespace {

QuerySample make_query(const std::string& id = "q1", int n_options = 4,
                       const std::string& type = "t1") {
  QuerySample q;
  q.id = id;
  q.query_type = type;
  q.question = "pick one";
  for (int i = 0; i < n_options; ++i) q.options.push_back(std::string(1, char('A' + i)));
  q.ground_truth = q.options[0];
  q.images.paths = {"img/a.png", "img/b.png"};
  return q;
}

ExpertiseProfile make_profile(const std::string& name, double acc_t1, double acc_t2 = 0.5) {
  ExpertiseProfile p;
  p.tool_name = name;
  p.accuracy = {{"t1", acc_t1}, {"t2", acc_t2}};
  return p;
}

ToolCall make_call(const std::string& tool) {
  ToolCall c;
  c.tool_name = tool;
  return c;
}

}  // namespace

TEST_CASE("register_tool rejects duplicates, dispatch flags unknown tools") {
  ToolRegistry registry;
  registry.register_tool(make_profile("tool_a", 1.0), EndpointPool("tool_a", local_endpoints(1)));
  CHECK(registry.contains("tool_a"));
  CHECK_THROWS_AS(registry.register_tool(make_profile("tool_a", 1.0),
                                         EndpointPool("tool_a", local_endpoints(1))),
                  duplicate_tool);

  auto q = make_query();
  auto responses = registry.dispatch_parallel({make_call("tool_x")}, q, 0);
  REQUIRE(responses.size() == 1);
  CHECK(responses[0].content.rfind("ERROR:", 0) == 0);
}

TEST_CASE("next_endpoint cycles in order") {
  EndpointPool pool("t", local_endpoints(3));
  std::vector<std::string> seen;
  for (int i = 0; i < 5; ++i) seen.push_back(pool.next_endpoint());
  CHECK(seen == std::vector<std::string>{"local:0", "local:1", "local:2", "local:0", "local:1"});
  CHECK(pool.cursor() == 2);

  EndpointPool single("t", local_endpoints(1));
  for (int i = 0; i < 7; ++i) CHECK(single.next_endpoint() == "local:0");
}

TEST_CASE("round-robin fairness: per-endpoint counts differ by at most one") {
  EndpointPool pool("t", local_endpoints(7));
  std::map<std::string, int> counts;
  const int n = 1000;
  for (int i = 0; i < n; ++i) counts[pool.next_endpoint()]++;
  int lo = n, hi = 0;
  for (const auto& [ep, c] : counts) {
    lo = std::min(lo, c);
    hi = std::max(hi, c);
  }
  CHECK(counts.size() == 7);
  CHECK(hi - lo <= 1);
}

TEST_CASE("concurrent cursor advances stay balanced") {
  EndpointPool pool("t", local_endpoints(5));
  std::atomic<int> counts[5] = {};
  std::vector<std::thread> threads;
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&pool, &counts] {
      for (int i = 0; i < 500; ++i) {
        std::string ep = pool.next_endpoint();
        counts[ep.back() - '0'].fetch_add(1);
      }
    });
  }
  for (auto& th : threads) th.join();
  int lo = 1 << 30, hi = 0;
  for (const auto& c : counts) {
    lo = std::min(lo, c.load());
    hi = std::max(hi, c.load());
  }
  CHECK(hi - lo <= 1);
  CHECK(pool.cursor() < 5);
}

TEST_CASE("resolve_image_label") {
  ImageContext ctx{{"a.png", "b.png"}};
  CHECK(resolve_image_label("Figure 1", ctx) == "a.png");
  CHECK(resolve_image_label("Figure 2", ctx) == "b.png");
  CHECK_THROWS_AS(resolve_image_label("Figure 3", ctx), bad_image_label);
  CHECK_THROWS_AS(resolve_image_label("Fig 1", ctx), bad_image_label);
  CHECK_THROWS_AS(resolve_image_label("figure 1", ctx), bad_image_label);
  CHECK_THROWS_AS(resolve_image_label("Figure 0", ctx), bad_image_label);
  CHECK_THROWS_AS(resolve_image_label("Figure 01", ctx), bad_image_label);
  CHECK_THROWS_AS(resolve_image_label("Figure 1 ", ctx), bad_image_label);
  CHECK_THROWS_AS(resolve_image_label("Figure", ctx), bad_image_label);
  CHECK_THROWS_AS(resolve_image_label("Figure 12345678901", ctx), bad_image_label);
}

TEST_CASE("simulate_tool accuracy boundaries") {
  auto q = make_query();
  SUBCASE("probability one always answers ground truth") {
    auto p = make_profile("t", 1.0);
    for (int i = 0; i < 200; ++i) {
      Rng rng(derive_seed(1, static_cast<uint64_t>(i)));
      CHECK(simulate_tool(p, q, rng).content == q.ground_truth);
    }
  }
  SUBCASE("probability zero never answers ground truth") {
    auto p = make_profile("t", 0.0);
    for (int i = 0; i < 200; ++i) {
      Rng rng(derive_seed(2, static_cast<uint64_t>(i)));
      CHECK(simulate_tool(p, q, rng).content != q.ground_truth);
    }
  }
  SUBCASE("uncovered query type") {
    auto p = make_profile("t", 1.0);
    auto q2 = make_query("q2", 4, "t9");
    Rng rng(0);
    CHECK_THROWS_AS(simulate_tool(p, q2, rng), uncovered_query_type);
  }
}

TEST_CASE("simulate_tool correctness frequency matches the profile (Monte Carlo)") {
  // n=10000, p=0.9: 3 sigma of the mean is 3*sqrt(.9*.1/10000) = 0.009
  auto profile = make_profile("t", 0.9);
  const int n = 10000;
  int correct = 0;
  for (int i = 0; i < n; ++i) {
    auto q = make_query("q" + std::to_string(i));
    Rng rng(derive_seed(42, static_cast<uint64_t>(i)));
    correct += simulate_tool(profile, q, rng).content == q.ground_truth;
  }
  const double freq = static_cast<double>(correct) / n;
  CHECK(freq == doctest::Approx(0.9).epsilon(0.012));
}

TEST_CASE("two independent tools conflict at the predicted rate") {
  // P(conflict) = pa(1-pb) + pb(1-pa) + (1-pa)(1-pb)*q, q = (k-2)/(k-1)
  const double pa = 0.9, pb = 0.6;
  const int k = 4, n = 20000;
  const double q_same = 1.0 / (k - 1);
  const double expected =
      pa * (1 - pb) + pb * (1 - pa) + (1 - pa) * (1 - pb) * (1 - q_same);
  auto prof_a = make_profile("a", pa);
  auto prof_b = make_profile("b", pb);
  int conflicts = 0;
  for (int i = 0; i < n; ++i) {
    auto q = make_query("q" + std::to_string(i), k);
    Rng ra(derive_seed(7, "a", static_cast<uint64_t>(i)));
    Rng rb(derive_seed(7, "b", static_cast<uint64_t>(i)));
    conflicts += simulate_tool(prof_a, q, ra).content != simulate_tool(prof_b, q, rb).content;
  }
  const double freq = static_cast<double>(conflicts) / n;
  const double sigma = std::sqrt(expected * (1 - expected) / n);
  CHECK(std::abs(freq - expected) < 3 * sigma + 1e-12);

  // two options: both-wrong draws always coincide, q = 0
  const double expected2 = pa * (1 - pb) + pb * (1 - pa);
  int conflicts2 = 0;
  for (int i = 0; i < n; ++i) {
    auto q = make_query("q" + std::to_string(i), 2);
    Rng ra(derive_seed(8, "a", static_cast<uint64_t>(i)));
    Rng rb(derive_seed(8, "b", static_cast<uint64_t>(i)));
    conflicts2 += simulate_tool(prof_a, q, ra).content != simulate_tool(prof_b, q, rb).content;
  }
  const double freq2 = static_cast<double>(conflicts2) / n;
  const double sigma2 = std::sqrt(expected2 * (1 - expected2) / n);
  CHECK(std::abs(freq2 - expected2) < 3 * sigma2 + 1e-12);
}

TEST_CASE("dispatch returns responses in call order") {
  ToolRegistry registry;
  registry.register_tool(make_profile("tool_a", 1.0), EndpointPool("tool_a", local_endpoints(2)));
  registry.register_tool(make_profile("tool_b", 0.0), EndpointPool("tool_b", local_endpoints(2)));
  auto q = make_query();
  auto responses = registry.dispatch_parallel({make_call("tool_a"), make_call("tool_b")}, q, 3);
  REQUIRE(responses.size() == 2);
  CHECK(responses[0].tool_name == "tool_a");
  CHECK(responses[1].tool_name == "tool_b");
  CHECK(responses[0].content == q.ground_truth);
  CHECK(responses[1].content != q.ground_truth);

  CHECK(registry.dispatch_parallel({}, q, 3).empty());
}

TEST_CASE("dispatch is deterministic given the seed") {
  auto run_once = [] {
    ToolRegistry registry;
    registry.register_tool(make_profile("tool_a", 0.7),
                           EndpointPool("tool_a", local_endpoints(3)));
    registry.register_tool(make_profile("tool_b", 0.4),
                           EndpointPool("tool_b", local_endpoints(2)));
    std::vector<std::string> contents;
    for (int i = 0; i < 50; ++i) {
      auto q = make_query("q" + std::to_string(i));
      for (const auto& r : registry.dispatch_parallel(
               {make_call("tool_a"), make_call("tool_b"), make_call("tool_a")}, q, 11))
        contents.push_back(r.content);
    }
    return contents;
  };
  CHECK(run_once() == run_once());
}

TEST_CASE("the same tool may be called twice in one turn") {
  ToolRegistry registry;
  registry.register_tool(make_profile("tool_a", 0.5), EndpointPool("tool_a", local_endpoints(1)));
  auto q = make_query();
  auto responses =
      registry.dispatch_parallel({make_call("tool_a"), make_call("tool_a")}, q, 5);
  REQUIRE(responses.size() == 2);
  CHECK(responses[0].tool_name == "tool_a");
  CHECK(responses[1].tool_name == "tool_a");
  // distinct ordinals give independent draws, same ordinal repeats
  auto again = registry.dispatch_parallel({make_call("tool_a"), make_call("tool_a")}, q, 5);
  CHECK(again[0].content == responses[0].content);
  CHECK(again[1].content == responses[1].content);
}

TEST_CASE("bad image labels become rendered ERROR responses") {
  ToolRegistry registry;
  registry.register_tool(make_profile("tool_a", 1.0), EndpointPool("tool_a", local_endpoints(1)));
  auto q = make_query();
  ToolCall call = make_call("tool_a");
  call.arguments["image"] = "Figure 9";
  auto responses = registry.dispatch_parallel({call}, q, 0);
  REQUIRE(responses.size() == 1);
  CHECK(responses[0].content.rfind("ERROR:", 0) == 0);
}

TEST_CASE("response order is call order under concurrent execution") {
  ToolRegistry registry;
  // custom handler sleeps a pseudo-random amount, then reports its ordinal
  ToolHandler slow = [](const ToolCall&, const DispatchContext& ctx) -> ToolResponse {
    std::this_thread::sleep_for(std::chrono::milliseconds(ctx.call_seed % 7));
    return {"slow", "ordinal=" + std::to_string(ctx.ordinal)};
  };
  registry.register_tool(make_profile("slow", 1.0), EndpointPool("slow", local_endpoints(3)),
                         slow);
  auto q = make_query();
  std::vector<ToolCall> calls(16, make_call("slow"));
  auto responses = registry.dispatch_parallel(calls, q, 123);
  REQUIRE(responses.size() == calls.size());
  for (size_t i = 0; i < responses.size(); ++i)
    CHECK(responses[i].content == "ordinal=" + std::to_string(i));
}
