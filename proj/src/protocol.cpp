// SPDX-License-Identifier: Apache-2.0
#include "trustrl/protocol.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include <json.hpp>

namespace trustrl {

namespace {

using ordered_json = nlohmann::ordered_json;

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool all_whitespace(std::string_view s) {
  return std::all_of(s.begin(), s.end(), is_space);
}

std::string_view trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return s.substr(b, e - b);
}

struct TagPair {
  size_t body_begin;
  size_t body_end;
  size_t close_end;
};

// Positions of open/close occurrences for one tag kind, validated to
// alternate open-close with no nesting. On violation returns the index of
// the offending block via *bad_block (count of completed pairs so far).
bool scan_balanced(std::string_view text, std::string_view open, std::string_view close,
                   std::vector<TagPair>& out, size_t* bad_block) {
  struct Occ {
    size_t pos;
    bool is_open;
  };
  std::vector<Occ> occs;
  for (size_t p = text.find(open); p != std::string_view::npos; p = text.find(open, p + 1))
    occs.push_back({p, true});
  for (size_t p = text.find(close); p != std::string_view::npos; p = text.find(close, p + 1))
    occs.push_back({p, false});
  std::sort(occs.begin(), occs.end(), [](const Occ& a, const Occ& b) { return a.pos < b.pos; });

  out.clear();
  bool expecting_open = true;
  size_t open_pos = 0;
  for (const auto& occ : occs) {
    if (occ.is_open != expecting_open) {
      *bad_block = out.size();
      return false;
    }
    if (occ.is_open) {
      open_pos = occ.pos;
    } else {
      out.push_back({open_pos + open.size(), occ.pos, occ.pos + close.size()});
    }
    expecting_open = !expecting_open;
  }
  if (!expecting_open) {  // trailing unmatched open
    *bad_block = out.size();
    return false;
  }
  return true;
}

// Lenient pair scan: greedily matches each open tag with the next close tag,
// skipping anything unpairable. Never fails.
std::vector<TagPair> scan_pairs_lenient(std::string_view text, std::string_view open,
                                        std::string_view close) {
  std::vector<TagPair> pairs;
  size_t pos = 0;
  while (true) {
    size_t o = text.find(open, pos);
    if (o == std::string_view::npos) break;
    size_t c = text.find(close, o + open.size());
    if (c == std::string_view::npos) break;
    pairs.push_back({o + open.size(), c, c + close.size()});
    pos = c + close.size();
  }
  return pairs;
}

ToolCall parse_tool_call_body(std::string_view body, size_t block_index) {
  auto j = nlohmann::json::parse(body, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object())
    throw protocol_error(ProtocolErrorKind::malformed_body, block_index,
                         "body is not a JSON object");
  ToolCall call;
  for (const auto& [key, value] : j.items()) {
    if (key == "name") {
      if (!value.is_string() || value.get<std::string>().empty())
        throw protocol_error(ProtocolErrorKind::malformed_body, block_index,
                             "\"name\" must be a non-empty string");
      call.tool_name = value.get<std::string>();
    } else if (key == "arguments") {
      if (!value.is_object())
        throw protocol_error(ProtocolErrorKind::malformed_body, block_index,
                             "\"arguments\" must be an object");
      for (const auto& [ak, av] : value.items()) {
        if (!av.is_string())
          throw protocol_error(ProtocolErrorKind::malformed_body, block_index,
                               "argument \"" + ak + "\" must be a string");
        call.arguments[ak] = av.get<std::string>();
      }
    } else {
      throw protocol_error(ProtocolErrorKind::malformed_body, block_index,
                           "unknown field \"" + key + "\"");
    }
  }
  if (call.tool_name.empty())
    throw protocol_error(ProtocolErrorKind::malformed_body, block_index, "missing \"name\"");
  return call;
}

void assert_renderable(std::string_view text) {
  static constexpr std::array<std::string_view, 6> kTags = {
      kToolCallOpen, kToolCallClose, kToolResponseOpen,
      kToolResponseClose, kAnswerOpen, kAnswerClose};
  for (auto tag : kTags) {
    if (text.find(tag) != std::string_view::npos)
      throw std::invalid_argument("content embeds protocol tag: " + std::string(tag));
  }
}

}  // namespace

const std::string* RolloutText::final_policy_segment() const {
  for (auto it = turns.rbegin(); it != turns.rend(); ++it) {
    if (it->kind == TurnKind::policy) return &it->text;
  }
  return nullptr;
}

std::vector<ToolCall> parse_tool_calls(std::string_view segment) {
  std::vector<TagPair> pairs;
  size_t bad = 0;
  if (!scan_balanced(segment, kToolCallOpen, kToolCallClose, pairs, &bad))
    throw protocol_error(ProtocolErrorKind::malformed_tag, bad, "unbalanced tool_call tags");
  std::vector<ToolCall> calls;
  calls.reserve(pairs.size());
  for (size_t i = 0; i < pairs.size(); ++i) {
    auto body = segment.substr(pairs[i].body_begin, pairs[i].body_end - pairs[i].body_begin);
    calls.push_back(parse_tool_call_body(body, i));
  }
  return calls;
}

std::optional<FinalAnswer> extract_final_answer(const RolloutText& rollout) {
  const std::string* seg = rollout.final_policy_segment();
  if (seg == nullptr) return std::nullopt;
  std::string_view s = *seg;
  size_t o = s.find(kAnswerOpen);
  if (o == std::string_view::npos) return std::nullopt;
  size_t body = o + kAnswerOpen.size();
  size_t c = s.find(kAnswerClose, body);
  if (c == std::string_view::npos) return std::nullopt;
  return FinalAnswer{std::string(trim(s.substr(body, c - body)))};
}

bool check_tool_call_format(const RolloutText& rollout) noexcept {
  for (const auto& turn : rollout.turns) {
    if (turn.kind != TurnKind::policy) continue;
    try {
      parse_tool_calls(turn.text);
    } catch (const protocol_error&) {
      return false;
    }
  }
  return true;
}

bool check_answer_format(const RolloutText& rollout) noexcept {
  const std::string* seg = rollout.final_policy_segment();
  if (seg == nullptr) return false;
  auto pairs = scan_pairs_lenient(*seg, kAnswerOpen, kAnswerClose);
  if (pairs.empty()) return false;
  return all_whitespace(std::string_view(*seg).substr(pairs.back().close_end));
}

RolloutText parse_rollout(std::string_view raw) {
  RolloutText out;
  out.raw = std::string(raw);

  auto push_policy = [&out](std::string_view text) {
    if (!all_whitespace(text)) out.turns.push_back({TurnKind::policy, std::string(trim(text))});
  };

  size_t pos = 0;
  while (pos < raw.size()) {
    size_t o = raw.find(kToolResponseOpen, pos);
    if (o == std::string_view::npos) {
      push_policy(raw.substr(pos));
      break;
    }
    size_t c = raw.find(kToolResponseClose, o + kToolResponseOpen.size());
    if (c == std::string_view::npos) {
      // dangling open tag: the rest is policy text
      push_policy(raw.substr(pos));
      break;
    }
    push_policy(raw.substr(pos, o - pos));

    // absorb consecutive response blocks (whitespace between them) into one
    // environment segment
    size_t seg_end = c + kToolResponseClose.size();
    while (true) {
      size_t next = seg_end;
      while (next < raw.size() && is_space(raw[next])) ++next;
      if (raw.compare(next, kToolResponseOpen.size(), kToolResponseOpen) != 0) break;
      size_t c2 = raw.find(kToolResponseClose, next + kToolResponseOpen.size());
      if (c2 == std::string_view::npos) break;
      seg_end = c2 + kToolResponseClose.size();
    }
    out.turns.push_back({TurnKind::environment, std::string(raw.substr(o, seg_end - o))});
    pos = seg_end;
  }
  return out;
}

std::string render_tool_call(const ToolCall& call) {
  assert_renderable(call.tool_name);
  ordered_json j;
  j["name"] = call.tool_name;
  if (!call.arguments.empty()) {
    ordered_json args = ordered_json::object();
    for (const auto& [k, v] : call.arguments) {  // std::map: sorted, canonical
      assert_renderable(k);
      assert_renderable(v);
      args[k] = v;
    }
    j["arguments"] = std::move(args);
  }
  return std::string(kToolCallOpen) + j.dump() + std::string(kToolCallClose);
}

std::string render_tool_response(const ToolResponse& response) {
  assert_renderable(response.tool_name);
  assert_renderable(response.content);
  ordered_json j;
  j["name"] = response.tool_name;
  j["content"] = response.content;
  return std::string(kToolResponseOpen) + j.dump() + std::string(kToolResponseClose);
}

std::string render_answer(std::string_view text) {
  assert_renderable(text);
  return std::string(kAnswerOpen) + std::string(text) + std::string(kAnswerClose);
}

RolloutText serialize_rollout(const Trajectory& trajectory) {
  std::vector<TurnText> turns;
  for (const auto& step : trajectory.steps) {
    TurnKind kind =
        step.kind == StepKind::policy_action ? TurnKind::policy : TurnKind::environment;
    if (step.rendered.empty()) continue;
    if (!turns.empty() && turns.back().kind == kind) {
      turns.back().text += "\n";
      turns.back().text += step.rendered;
    } else {
      turns.push_back({kind, step.rendered});
    }
  }
  RolloutText out;
  out.turns = std::move(turns);
  std::string raw;
  for (size_t i = 0; i < out.turns.size(); ++i) {
    if (i > 0) raw += "\n";
    raw += out.turns[i].text;
  }
  out.raw = std::move(raw);
  return out;
}

RolloutView structured_view(const RolloutText& rollout) {
  RolloutView view;
  for (const auto& turn : rollout.turns) {
    if (turn.kind == TurnKind::policy) {
      try {
        auto calls = parse_tool_calls(turn.text);
        view.calls.insert(view.calls.end(), calls.begin(), calls.end());
      } catch (const protocol_error&) {
        // skip malformed segment
      }
    } else {
      for (const auto& pair :
           scan_pairs_lenient(turn.text, kToolResponseOpen, kToolResponseClose)) {
        std::string_view body =
            std::string_view(turn.text).substr(pair.body_begin, pair.body_end - pair.body_begin);
        auto j = nlohmann::json::parse(body, nullptr, false);
        if (!j.is_discarded() && j.is_object() && j.contains("name") && j["name"].is_string() &&
            j.contains("content") && j["content"].is_string()) {
          view.responses.push_back(
              {j["name"].get<std::string>(), j["content"].get<std::string>()});
        } else {
          view.responses.push_back({"", std::string(body)});
        }
      }
    }
  }
  view.answer = extract_final_answer(rollout);
  return view;
}

}  // namespace trustrl
