// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "trustrl/errors.hpp"
#include "trustrl/trajectory.hpp"

namespace trustrl {

// Literal tags of the rollout grammar; matched byte-for-byte, UTF-8 text.
inline constexpr std::string_view kToolCallOpen = "<tool_call>";
inline constexpr std::string_view kToolCallClose = "</tool_call>";
inline constexpr std::string_view kToolResponseOpen = "<tool_response>";
inline constexpr std::string_view kToolResponseClose = "</tool_response>";
inline constexpr std::string_view kAnswerOpen = "<answer>";
inline constexpr std::string_view kAnswerClose = "</answer>";

// A parsed tool invocation. The body schema is closed: a JSON object with a
// required non-empty string "name" and an optional string→string object
// "arguments"; anything else is rejected.
struct ToolCall {
  std::string tool_name;
  std::map<std::string, std::string> arguments;

  // The "image" argument, when present ("Figure k").
  std::optional<std::string> image_label() const {
    auto it = arguments.find("image");
    if (it == arguments.end()) return std::nullopt;
    return it->second;
  }

  bool operator==(const ToolCall&) const = default;
};

struct ToolResponse {
  std::string tool_name;
  std::string content;

  bool operator==(const ToolResponse&) const = default;
};

struct FinalAnswer {
  std::string text;

  bool operator==(const FinalAnswer&) const = default;
};

enum class TurnKind { policy, environment };

struct TurnText {
  TurnKind kind;
  std::string text;

  bool operator==(const TurnText&) const = default;
};

// A rollout as interleaved policy/environment segments plus the raw text.
struct RolloutText {
  std::vector<TurnText> turns;
  std::string raw;

  // Last policy segment, or nullptr if the rollout has none.
  const std::string* final_policy_segment() const;
};

// Structured content of a rollout: every tool call and response in document
// order, plus the final answer if present.
struct RolloutView {
  std::vector<ToolCall> calls;
  std::vector<ToolResponse> responses;
  std::optional<FinalAnswer> answer;

  bool operator==(const RolloutView&) const = default;
};

// Returns every well-formed <tool_call> block of one policy segment, in
// order. Throws protocol_error (malformed_tag on unbalanced/nested tags,
// malformed_body on a body that is not a closed-schema JSON object), carrying
// the offending block index.
std::vector<ToolCall> parse_tool_calls(std::string_view segment);

// Content of the first answer pair in the final policy segment, trimmed.
// Absence is a valid result.
std::optional<FinalAnswer> extract_final_answer(const RolloutText& rollout);

// True iff every tool_call block in every policy segment is well-formed;
// vacuously true when no tool calls occur.
bool check_tool_call_format(const RolloutText& rollout) noexcept;

// True iff the final policy segment ends with a well-formed answer block
// (nothing but whitespace after the last close tag).
bool check_answer_format(const RolloutText& rollout) noexcept;

// Splits raw text into turns: tool_response blocks are environment segments,
// everything else policy. Total on arbitrary bytes; never throws.
RolloutText parse_rollout(std::string_view raw);

// Canonical tagged text for a trajectory: consecutive same-kind steps form
// one segment, segments are joined by single newlines. Steps must carry
// renderable content (no embedded tag literals).
RolloutText serialize_rollout(const Trajectory& trajectory);

std::string render_tool_call(const ToolCall& call);
std::string render_tool_response(const ToolResponse& response);
std::string render_answer(std::string_view text);

// Best-effort structured view; malformed blocks are skipped.
RolloutView structured_view(const RolloutText& rollout);

}  // namespace trustrl
