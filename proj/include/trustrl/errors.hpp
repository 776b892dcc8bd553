// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace trustrl {

class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// --- protocol ---

enum class ProtocolErrorKind { malformed_tag, malformed_body };

class protocol_error : public error {
 public:
  protocol_error(ProtocolErrorKind kind, size_t block_index, const std::string& msg)
      : error("block " + std::to_string(block_index) + ": " + msg),
        kind_(kind),
        block_index_(block_index) {}
  ProtocolErrorKind kind() const { return kind_; }
  size_t block_index() const { return block_index_; }

 private:
  ProtocolErrorKind kind_;
  size_t block_index_;
};

// --- tools ---

class duplicate_tool : public error {
 public:
  explicit duplicate_tool(const std::string& name) : error("duplicate tool: " + name) {}
};

class unknown_tool : public error {
 public:
  explicit unknown_tool(const std::string& name) : error("unknown tool: " + name) {}
};

class bad_image_label : public error {
 public:
  explicit bad_image_label(const std::string& msg) : error("bad image label: " + msg) {}
};

class uncovered_query_type : public error {
 public:
  uncovered_query_type(const std::string& tool, const std::string& type)
      : error("tool " + tool + " has no accuracy entry for query type '" + type + "'") {}
};

// --- policy / grpo ---

class unknown_observation : public error {
 public:
  explicit unknown_observation(const std::string& msg) : error("unknown observation: " + msg) {}
};

class snapshot_mismatch : public error {
 public:
  explicit snapshot_mismatch(const std::string& msg) : error("snapshot mismatch: " + msg) {}
};

// --- dataset ---

enum class DatasetErrorKind { parse, invariant };

class dataset_error : public error {
 public:
  dataset_error(DatasetErrorKind kind, size_t line, const std::string& msg)
      : error("line " + std::to_string(line) + ": " + msg), kind_(kind), line_(line) {}
  DatasetErrorKind kind() const { return kind_; }
  size_t line() const { return line_; }

 private:
  DatasetErrorKind kind_;
  size_t line_;
};

// --- config ---

class config_error : public error {
 public:
  config_error(const std::string& field, const std::string& msg)
      : error("config field '" + field + "': " + msg), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

}  // namespace trustrl
