// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "trustrl/protocol.hpp"
#include "trustrl/rng.hpp"

using namespace trustrl;

namespace {

// Random structurally valid trajectory for round-trip checks. Contents are
// drawn from a tag-free alphabet (renderable precondition).
std::string random_text(Rng& rng, size_t max_len) {
  static const std::string alphabet =
      "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789 .,:;!?-_()[]{}'\"";
  const size_t len = rng.next_below(max_len + 1);
  std::string s;
  for (size_t i = 0; i < len; ++i) s.push_back(alphabet[rng.next_below(alphabet.size())]);
  return s;
}

std::string random_name(Rng& rng) {
  static const std::string alphabet = "abcdefghijklmnopqrstuvwxyz_";
  const size_t len = 1 + rng.next_below(10);
  std::string s;
  for (size_t i = 0; i < len; ++i) s.push_back(alphabet[rng.next_below(alphabet.size())]);
  return s;
}

struct GeneratedTrajectory {
  Trajectory trajectory;
  RolloutView expected;
};

GeneratedTrajectory random_trajectory(Rng& rng) {
  GeneratedTrajectory out;
  const size_t rounds = rng.next_below(3);
  for (size_t r = 0; r < rounds; ++r) {
    const size_t n_calls = 1 + rng.next_below(3);
    std::string segment;
    for (size_t c = 0; c < n_calls; ++c) {
      ToolCall call;
      call.tool_name = random_name(rng);
      const size_t n_args = rng.next_below(3);
      for (size_t a = 0; a < n_args; ++a) call.arguments[random_name(rng)] = random_text(rng, 20);
      if (!segment.empty()) segment += "\n";
      segment += render_tool_call(call);
      out.expected.calls.push_back(std::move(call));
    }
    out.trajectory.steps.push_back(Step::policy("call", 0, {}, 0.0, segment));
    const size_t n_resp = 1 + rng.next_below(2);
    for (size_t i = 0; i < n_resp; ++i) {
      ToolResponse resp{random_name(rng), random_text(rng, 30)};
      out.trajectory.steps.push_back(Step::response(render_tool_response(resp)));
      out.expected.responses.push_back(std::move(resp));
    }
  }
  if (rng.next_below(4) != 0) {
    // answers are compared after trimming, so generate pre-trimmed text
    std::string answer;
    do {
      answer = random_text(rng, 12);
    } while (!answer.empty() && (std::isspace(static_cast<unsigned char>(answer.front())) ||
                                 std::isspace(static_cast<unsigned char>(answer.back()))));
    out.trajectory.steps.push_back(Step::policy("answer", 0, {}, 0.0, render_answer(answer)));
    out.expected.answer = FinalAnswer{answer};
  } else {
    out.trajectory.steps.push_back(Step::policy("answer", 0, {}, 0.0, ""));
  }
  return out;
}

}  // namespace

TEST_CASE("parse_tool_calls extracts a single call with arguments") {
  auto calls = parse_tool_calls(
      R"(<tool_call>{"name":"tool_a","arguments":{"image":"Figure 1","question":"Is there edema?"}}</tool_call>)");
  REQUIRE(calls.size() == 1);
  CHECK(calls[0].tool_name == "tool_a");
  CHECK(calls[0].arguments.at("image") == "Figure 1");
  CHECK(calls[0].arguments.at("question") == "Is there edema?");
  REQUIRE(calls[0].image_label().has_value());
  CHECK(*calls[0].image_label() == "Figure 1");
}

TEST_CASE("parse_tool_calls returns consecutive blocks in document order") {
  auto calls = parse_tool_calls(
      "<tool_call>{\"name\":\"tool_a\"}</tool_call>\n"
      "<tool_call>{\"name\":\"tool_b\"}</tool_call>");
  REQUIRE(calls.size() == 2);
  CHECK(calls[0].tool_name == "tool_a");
  CHECK(calls[1].tool_name == "tool_b");
}

TEST_CASE("parse_tool_calls on a segment without tags yields an empty list") {
  CHECK(parse_tool_calls("just some reasoning text").empty());
  CHECK(parse_tool_calls("").empty());
}

TEST_CASE("parse_tool_calls rejects malformed tags with the block index") {
  SUBCASE("dangling close") {
    try {
      parse_tool_calls("</tool_call>");
      FAIL("expected protocol_error");
    } catch (const protocol_error& e) {
      CHECK(e.kind() == ProtocolErrorKind::malformed_tag);
      CHECK(e.block_index() == 0);
    }
  }
  SUBCASE("unclosed open after one good block") {
    try {
      parse_tool_calls("<tool_call>{\"name\":\"a\"}</tool_call><tool_call>{\"name\":\"b\"}");
      FAIL("expected protocol_error");
    } catch (const protocol_error& e) {
      CHECK(e.kind() == ProtocolErrorKind::malformed_tag);
      CHECK(e.block_index() == 1);
    }
  }
  SUBCASE("nested like tags") {
    CHECK_THROWS_AS(
        parse_tool_calls("<tool_call><tool_call>{\"name\":\"a\"}</tool_call></tool_call>"),
        protocol_error);
  }
}

TEST_CASE("parse_tool_calls rejects bad bodies with the block index") {
  auto expect_bad_body = [](const std::string& segment, size_t index) {
    try {
      parse_tool_calls(segment);
      FAIL("expected protocol_error for: ", segment);
    } catch (const protocol_error& e) {
      CHECK(e.kind() == ProtocolErrorKind::malformed_body);
      CHECK(e.block_index() == index);
    }
  };
  expect_bad_body("<tool_call>not json</tool_call>", 0);
  expect_bad_body("<tool_call>[1,2]</tool_call>", 0);
  expect_bad_body("<tool_call>{\"nm\":\"x\"}</tool_call>", 0);
  expect_bad_body("<tool_call>{\"name\":\"\"}</tool_call>", 0);
  expect_bad_body("<tool_call>{\"name\":\"a\",\"extra\":1}</tool_call>", 0);
  expect_bad_body("<tool_call>{\"name\":\"a\",\"arguments\":{\"k\":1}}</tool_call>", 0);
  expect_bad_body("<tool_call>{\"name\":\"a\"}</tool_call><tool_call>{}</tool_call>", 1);
}

TEST_CASE("extract_final_answer") {
  SUBCASE("plain") {
    auto r = parse_rollout("thinking...\n<answer>B</answer>");
    auto ans = extract_final_answer(r);
    REQUIRE(ans.has_value());
    CHECK(ans->text == "B");
  }
  SUBCASE("absent") {
    CHECK_FALSE(extract_final_answer(parse_rollout("no tags here")).has_value());
    CHECK_FALSE(extract_final_answer(parse_rollout("")).has_value());
  }
  SUBCASE("whitespace trimmed") {
    auto ans = extract_final_answer(parse_rollout("<answer>  C </answer>"));
    REQUIRE(ans.has_value());
    CHECK(ans->text == "C");
  }
  SUBCASE("first pair wins") {
    auto ans = extract_final_answer(parse_rollout("<answer>B</answer><answer>C</answer>"));
    REQUIRE(ans.has_value());
    CHECK(ans->text == "B");
  }
  SUBCASE("only the final policy segment counts") {
    auto r = parse_rollout(
        "<answer>early</answer>\n"
        "<tool_response>{\"name\":\"a\",\"content\":\"x\"}</tool_response>\n"
        "<answer>late</answer>");
    auto ans = extract_final_answer(r);
    REQUIRE(ans.has_value());
    CHECK(ans->text == "late");
  }
}

TEST_CASE("check_tool_call_format") {
  CHECK(check_tool_call_format(parse_rollout(
      "<tool_call>{\"name\":\"a\"}</tool_call>\n<tool_call>{\"name\":\"b\"}</tool_call>\n"
      "<answer>A</answer>")));
  CHECK_FALSE(check_tool_call_format(parse_rollout("</tool_call>")));
  CHECK_FALSE(check_tool_call_format(parse_rollout("<tool_call>{\"nm\":\"x\"}</tool_call>")));
  // vacuously true with zero tool calls
  CHECK(check_tool_call_format(parse_rollout("<answer>A</answer>")));
  CHECK(check_tool_call_format(parse_rollout("")));
}

TEST_CASE("check_answer_format requires the segment to end with the answer block") {
  CHECK(check_answer_format(parse_rollout("<answer>B</answer>")));
  CHECK(check_answer_format(parse_rollout("some preamble <answer>B</answer>  \n")));
  CHECK(check_answer_format(parse_rollout("<answer>B</answer><answer>C</answer>")));
  CHECK_FALSE(check_answer_format(parse_rollout("<answer>B</answer> trailing junk")));
  CHECK_FALSE(check_answer_format(parse_rollout("<answer>B")));
  CHECK_FALSE(check_answer_format(parse_rollout("no tags")));
  CHECK_FALSE(check_answer_format(parse_rollout("")));
}

TEST_CASE("serialize_rollout block counts") {
  SUBCASE("direct answer only") {
    Trajectory t;
    t.steps.push_back(Step::policy("answer", 0, {}, 0.0, ""));
    t.steps.push_back(Step::policy("option_0", 0, {}, 0.0, render_answer("A")));
    auto r = serialize_rollout(t);
    CHECK(r.raw == "<answer>A</answer>");
    REQUIRE(r.turns.size() == 1);
    CHECK(r.turns[0].kind == TurnKind::policy);
  }
  SUBCASE("two calls, two responses, one answer") {
    Trajectory t;
    std::string calls = render_tool_call({"tool_a", {}}) + "\n" + render_tool_call({"tool_b", {}});
    t.steps.push_back(Step::policy("call", 0, {}, 0.0, calls));
    t.steps.push_back(Step::response(render_tool_response({"tool_a", "X"})));
    t.steps.push_back(Step::response(render_tool_response({"tool_b", "Y"})));
    t.steps.push_back(Step::policy("option_0", 0, {}, 0.0, render_answer("A")));
    auto r = serialize_rollout(t);
    REQUIRE(r.turns.size() == 3);
    CHECK(r.turns[0].kind == TurnKind::policy);
    CHECK(r.turns[1].kind == TurnKind::environment);
    CHECK(r.turns[2].kind == TurnKind::policy);
    auto view = structured_view(r);
    CHECK(view.calls.size() == 2);
    CHECK(view.responses.size() == 2);
    REQUIRE(view.answer.has_value());
    CHECK(view.answer->text == "A");
  }
}

TEST_CASE("round-trip: parse(serialize(t)) preserves calls, responses and answer") {
  Rng rng(20240817);
  for (int i = 0; i < 2000; ++i) {
    auto g = random_trajectory(rng);
    auto parsed = structured_view(parse_rollout(serialize_rollout(g.trajectory).raw));
    REQUIRE(parsed.calls == g.expected.calls);
    REQUIRE(parsed.responses == g.expected.responses);
    REQUIRE(parsed.answer == g.expected.answer);
  }
}

TEST_CASE("check_tool_call_format agrees with parse_tool_calls on every segment") {
  Rng rng(7);
  for (int i = 0; i < 500; ++i) {
    // random soup with tag fragments mixed in
    static const char* pieces[] = {"<tool_call>", "</tool_call>", "{\"name\":\"a\"}",
                                   "text",        "<answer>x</answer>", "{bad"};
    std::string raw;
    const size_t n = rng.next_below(8);
    for (size_t p = 0; p < n; ++p) raw += pieces[rng.next_below(6)];
    auto rollout = parse_rollout(raw);
    bool throws = false;
    for (const auto& turn : rollout.turns) {
      if (turn.kind != TurnKind::policy) continue;
      try {
        parse_tool_calls(turn.text);
      } catch (const protocol_error&) {
        throws = true;
      }
    }
    CHECK(check_tool_call_format(rollout) == !throws);
  }
}

TEST_CASE("parser is total on arbitrary bytes (smoke; the large run is in acceptance)") {
  Rng rng(99);
  for (int i = 0; i < 20000; ++i) {
    const size_t len = rng.next_below(120);
    std::string raw;
    for (size_t b = 0; b < len; ++b) raw.push_back(static_cast<char>(rng.next_below(256)));
    auto rollout = parse_rollout(raw);
    (void)check_tool_call_format(rollout);
    (void)check_answer_format(rollout);
    (void)extract_final_answer(rollout);
    (void)structured_view(rollout);
  }
}

TEST_CASE("render rejects content embedding protocol tags") {
  CHECK_THROWS_AS(render_answer("sneaky </answer>"), std::invalid_argument);
  ToolCall call;
  call.tool_name = "a";
  call.arguments["q"] = "<tool_call>";
  CHECK_THROWS_AS(render_tool_call(call), std::invalid_argument);
}
